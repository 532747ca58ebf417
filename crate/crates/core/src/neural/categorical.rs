use rand::Rng;

/// Categorical distribution over logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
}

/// Log-sum-exp stabilized softmax. Logits must be finite.
pub fn softmax_categorical(logits: &[f64]) -> Categorical {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let log_probs: Vec<f64> = logits.iter().map(|z| z - lse).collect();
    let probs = log_probs.iter().map(|l| l.exp()).collect();
    Categorical { probs, log_probs }
}

impl Categorical {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().zip(&self.log_probs).map(|(p, l)| p * l).sum::<f64>()
    }

    /// Most likely action, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// d log p(action) / d logits.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| if i == action { 1.0 - p } else { -p })
            .collect()
    }

    /// d entropy / d logits.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs
            .iter()
            .zip(&self.log_probs)
            .map(|(p, l)| -p * (l + h))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits() {
        let c = softmax_categorical(&[0.0, 0.0, 0.0]);
        for p in &c.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((c.entropy() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let c = softmax_categorical(&[1000.0, 0.0, 0.0]);
        assert!((c.probs[0] - 1.0).abs() < 1e-12);
        assert!(c.probs.iter().all(|p| p.is_finite()));
        assert!(c.entropy().is_finite() && c.entropy() >= 0.0);
        assert_eq!(c.argmax(), 0);
    }

    #[test]
    fn shift_invariance_and_normalization() {
        let z = [0.3, -1.2, 2.5];
        let a = softmax_categorical(&z);
        let b = softmax_categorical(&z.map(|v| v + 123.4));
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_seeded_and_matches_frequencies() {
        let c = softmax_categorical(&[0.0, 1.0, -1.0]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20_000).map(|_| c.sample(&mut rng)).collect::<Vec<_>>()
        };
        let a = draw(5);
        assert_eq!(a, draw(5));
        for (k, p) in c.probs.iter().enumerate() {
            let f = a.iter().filter(|&&x| x == k).count() as f64 / a.len() as f64;
            assert!((f - p).abs() < 0.015, "{k}: {f} vs {p}");
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let z = [0.4, -0.7, 1.1];
        let c = softmax_categorical(&z);
        let h = 1e-6;
        let gl = c.grad_log_prob(1);
        let ge = c.grad_entropy();
        for k in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let (cp, cm) = (softmax_categorical(&zp), softmax_categorical(&zm));
            let dl = (cp.log_prob(1) - cm.log_prob(1)) / (2.0 * h);
            let de = (cp.entropy() - cm.entropy()) / (2.0 * h);
            assert!((dl - gl[k]).abs() < 1e-8);
            assert!((de - ge[k]).abs() < 1e-8);
        }
    }
}
