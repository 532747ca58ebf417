use rand::Rng;
use serde::{Deserialize, Serialize};

use super::observation::{Observation, ObservationConfig, EGO_FEATURES, OPPONENT_FEATURES};
use crate::neural::{
    softmax_categorical, Activation, BranchSpec, Categorical, ForwardCache, HeadSpec, LayerSpec, Network, NetworkSpec,
    Result, Tensor,
};
use crate::planner::Mode;

/// Layer widths of the actor-critic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub ego_hidden: usize,
    pub opponent_hidden: usize,
    pub conv_channels: [usize; 2],
    pub conv_kernels: [usize; 2],
    pub track_hidden: usize,
    pub trunk_hidden: usize,
    pub policy_init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            ego_hidden: 32,
            opponent_hidden: 16,
            conv_channels: [8, 8],
            conv_kernels: [5, 3],
            track_hidden: 64,
            trunk_hidden: 128,
            policy_init_scale: 0.01,
        }
    }
}

impl ModelConfig {
    /// Three encoders joined into a shared trunk with a policy head
    /// (one logit per mode) and a value head.
    pub fn network_spec(&self, obs: &ObservationConfig) -> NetworkSpec {
        let [channels, lookahead] = obs.track_shape();
        let [c1, c2] = self.conv_channels;
        let [k1, k2] = self.conv_kernels;
        let conv_len = (lookahead + 2).saturating_sub(k1 + k2);
        let tanh = Activation::Tanh;
        NetworkSpec {
            branches: vec![
                BranchSpec {
                    input_shape: vec![EGO_FEATURES],
                    layers: vec![LayerSpec::dense(EGO_FEATURES, self.ego_hidden, tanh)],
                },
                BranchSpec {
                    input_shape: vec![OPPONENT_FEATURES],
                    layers: vec![LayerSpec::dense(OPPONENT_FEATURES, self.opponent_hidden, tanh)],
                },
                BranchSpec {
                    input_shape: vec![channels, lookahead],
                    layers: vec![
                        LayerSpec::conv1d(channels, c1, k1, tanh),
                        LayerSpec::conv1d(c1, c2, k2, tanh),
                        LayerSpec::Flatten,
                        LayerSpec::dense(c2 * conv_len, self.track_hidden, tanh),
                    ],
                },
            ],
            trunk: vec![LayerSpec::dense(
                self.ego_hidden + self.opponent_hidden + self.track_hidden,
                self.trunk_hidden,
                tanh,
            )],
            heads: vec![
                HeadSpec {
                    layers: vec![LayerSpec::dense(self.trunk_hidden, Mode::ALL.len(), Activation::Linear)],
                    init_scale: self.policy_init_scale,
                },
                HeadSpec {
                    layers: vec![LayerSpec::dense(self.trunk_hidden, 1, Activation::Linear)],
                    init_scale: 1.0,
                },
            ],
        }
    }
}

/// Output of one actor-critic evaluation.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub logits: [f64; 3],
    pub value: f64,
    pub dist: Categorical,
    pub cache: ForwardCache,
}

#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub net: Network,
    pub obs: ObservationConfig,
}

impl ActorCritic {
    pub fn new<R: Rng>(model: &ModelConfig, obs: ObservationConfig, rng: &mut R) -> Result<Self> {
        Ok(Self {
            net: Network::init(model.network_spec(&obs), rng)?,
            obs,
        })
    }

    pub fn policy_forward(&self, obs: &Observation) -> Result<PolicyOutput> {
        let (out, cache) = self.net.forward(&obs.to_tensors(&self.obs))?;
        let l = &out[0].data;
        let logits = [l[0], l[1], l[2]];
        Ok(PolicyOutput {
            logits,
            value: out[1].data[0],
            dist: softmax_categorical(&logits),
            cache,
        })
    }

    /// Argmax mode.
    pub fn act_greedy(&self, obs: &Observation) -> Result<Mode> {
        let out = self.policy_forward(obs)?;
        Ok(Mode::from_index(out.dist.argmax()).expect("three logits"))
    }

    /// Accumulates parameter gradients for loss derivatives with respect to
    /// the logits and the value.
    pub fn accumulate(&self, cache: &ForwardCache, d_logits: [f64; 3], d_value: f64, grads: &mut [f64]) -> Result<()> {
        self.net.backward_accumulate(
            cache,
            &[Tensor::vector(d_logits.to_vec()), Tensor::vector(vec![d_value])],
            grads,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_obs(rng: &mut ChaCha8Rng, cfg: &ObservationConfig) -> Observation {
        let [c, l] = cfg.track_shape();
        Observation {
            ego: std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)),
            opponent: std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)),
            track: (0..c * l).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        }
    }

    #[test]
    fn default_architecture() {
        let spec = ModelConfig::default().network_spec(&ObservationConfig::default());
        assert_eq!(spec.validate().unwrap(), vec![vec![3], vec![1]]);
        let expected = (7 * 32 + 32)
            + (4 * 16 + 16)
            + (6 * 8 * 5 + 8)
            + (8 * 8 * 3 + 8)
            + (8 * 14 * 64 + 64)
            + (112 * 128 + 128)
            + (128 * 3 + 3)
            + (128 + 1);
        assert_eq!(spec.param_count(), expected);
    }

    #[test]
    fn fresh_policy_is_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ObservationConfig::default();
        let ac = ActorCritic::new(&ModelConfig::default(), cfg, &mut rng).unwrap();
        for _ in 0..1000 {
            let o = random_obs(&mut rng, &cfg);
            let out = ac.policy_forward(&o).unwrap();
            for p in &out.dist.probs {
                assert!((p - 1.0 / 3.0).abs() < 0.02, "{p}");
            }
            assert!(out.value.is_finite());
        }
    }

    #[test]
    fn identical_observations_identical_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ObservationConfig::default();
        let ac = ActorCritic::new(&ModelConfig::default(), cfg, &mut rng).unwrap();
        let o = random_obs(&mut rng, &cfg);
        let a = ac.policy_forward(&o).unwrap();
        let b = ac.policy_forward(&o.clone()).unwrap();
        assert_eq!(a.logits.map(f64::to_bits), b.logits.map(f64::to_bits));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
