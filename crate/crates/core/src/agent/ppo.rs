use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::model::ActorCritic;
use super::AgentError;
use crate::neural::{adam_step, AdamState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda_gae: f64,
    pub clip_eps: f64,
    /// Value loss coefficient.
    pub c1: f64,
    /// Entropy bonus coefficient.
    pub c2: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub lr: f64,
    pub n_envs: usize,
    /// Steps per environment per update.
    pub rollout_len: usize,
    pub total_steps: u64,
    /// Fraction of training episodes against the non-reactive opponent.
    pub opponent_mix: f64,
    pub normalize_advantages: bool,
    /// Global gradient norm cap; 0 disables.
    pub max_grad_norm: f64,
    /// Multiplier applied to environment rewards before learning.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda_gae: 0.95,
            clip_eps: 0.2,
            c1: 0.5,
            c2: 0.01,
            epochs: 4,
            minibatch_size: 256,
            lr: 3e-4,
            n_envs: 8,
            rollout_len: 512,
            total_steps: 200_000,
            opponent_mix: 0.5,
            normalize_advantages: true,
            max_grad_norm: 0.5,
            reward_scale: 0.01,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidConfig(m.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda_gae) {
            return bad("lambda_gae must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if !(self.lr > 0.0) || self.c1 < 0.0 || self.c2 < 0.0 {
            return bad("lr must be positive and loss coefficients non-negative");
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.n_envs == 0 || self.rollout_len == 0 {
            return bad("epochs, minibatch_size, n_envs and rollout_len must be positive");
        }
        if !(0.0..=1.0).contains(&self.opponent_mix) {
            return bad("opponent_mix must lie in [0, 1]");
        }
        if !(self.reward_scale > 0.0) || self.max_grad_norm < 0.0 {
            return bad("reward_scale must be positive and max_grad_norm non-negative");
        }
        Ok(())
    }

    pub fn steps_per_update(&self) -> u64 {
        (self.n_envs * self.rollout_len) as u64
    }
}

/// Mean statistics over all minibatches of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// `min(r Â, clip(r, 1-ε, 1+ε) Â)` and whether the clipped branch is the
/// active one (which carries no gradient).
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if clipped < unclipped {
        (clipped, true)
    } else {
        (unclipped, false)
    }
}

/// Runs `epochs` passes of shuffled minibatch updates over `buffer`.
pub fn ppo_update<R: Rng>(
    buffer: &RolloutBuffer,
    model: &mut ActorCritic,
    adam: &mut AdamState,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<LossStats, AgentError> {
    let n = buffer.len();
    if n == 0 || buffer.advantages.len() != n || buffer.returns.len() != n {
        return Err(AgentError::IncompleteBuffer("advantages not computed".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = vec![0.0; model.net.param_count()];
    let mut totals = LossStats::default();
    let mut batches = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let b = batch.len() as f64;
            let mut s = LossStats::default();
            for &i in batch {
                let out = model.policy_forward(&buffer.observations[i])?;
                let a = buffer.actions[i];
                let adv = buffer.advantages[i];
                let log_ratio = out.dist.log_prob(a) - buffer.log_probs[i];
                let ratio = log_ratio.exp();
                let (surr, clipped) = clipped_surrogate(ratio, adv, cfg.clip_eps);
                let v_err = out.value - buffer.returns[i];
                let entropy = out.dist.entropy();
                s.policy_loss -= surr / b;
                s.value_loss += v_err * v_err / b;
                s.entropy += entropy / b;
                if (ratio - 1.0).abs() > cfg.clip_eps {
                    s.clip_fraction += 1.0 / b;
                }
                s.approx_kl += ((ratio - 1.0) - log_ratio) / b;

                let mut d_logits = [0.0; 3];
                if !clipped {
                    let g = out.dist.grad_log_prob(a);
                    for k in 0..3 {
                        d_logits[k] -= adv * ratio * g[k] / b;
                    }
                }
                let ge = out.dist.grad_entropy();
                for k in 0..3 {
                    d_logits[k] -= cfg.c2 * ge[k] / b;
                }
                let d_value = cfg.c1 * 2.0 * v_err / b;
                model.accumulate(&out.cache, d_logits, d_value, &mut grads)?;
            }
            let total = s.policy_loss + cfg.c1 * s.value_loss - cfg.c2 * s.entropy;
            if !total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(AgentError::NonFiniteLoss(format!(
                    "policy {} value {} entropy {} kl {}",
                    s.policy_loss, s.value_loss, s.entropy, s.approx_kl
                )));
            }
            if cfg.max_grad_norm > 0.0 {
                let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > cfg.max_grad_norm {
                    let k = cfg.max_grad_norm / norm;
                    grads.iter_mut().for_each(|g| *g *= k);
                }
            }
            adam_step(&mut model.net.params, &grads, adam)?;
            totals.policy_loss += s.policy_loss;
            totals.value_loss += s.value_loss;
            totals.entropy += s.entropy;
            totals.clip_fraction += s.clip_fraction;
            totals.approx_kl += s.approx_kl;
            batches += 1;
        }
    }
    let k = batches as f64;
    Ok(LossStats {
        policy_loss: totals.policy_loss / k,
        value_loss: totals.value_loss / k,
        entropy: totals.entropy / k,
        clip_fraction: totals.clip_fraction / k,
        approx_kl: totals.approx_kl / k,
    })
}
