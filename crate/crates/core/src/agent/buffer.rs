use super::observation::Observation;
use super::AgentError;

/// Transitions of one environment over one rollout, in time order.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value estimate of the state after the final transition.
    pub bootstrap: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn push(&mut self, obs: Observation, action: usize, log_prob: f64, value: f64, reward: f64, done: bool) {
        self.observations.push(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }
}

/// Generalized advantage estimates and returns.
///
/// `δ_t = r_t + γ V_{t+1} (1 - d_t) - V_t`, `A_t = δ_t + γλ (1 - d_t) A_{t+1}`,
/// returns `A + V`. `V_T` is `bootstrap`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(AgentError::IncompleteBuffer(format!(
            "{n} rewards, {} values, {} done flags",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Flattened rollouts from all environments, in environment order.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub observations: Vec<Observation>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Computes advantages per trajectory and concatenates.
    pub fn assemble(trajectories: Vec<Trajectory>, gamma: f64, lambda: f64) -> Result<Self, AgentError> {
        let mut buf = RolloutBuffer::default();
        for tr in trajectories {
            if tr.observations.len() != tr.len() || tr.log_probs.len() != tr.len() {
                return Err(AgentError::IncompleteBuffer("ragged trajectory".into()));
            }
            let bootstrap = match (tr.bootstrap, tr.dones.last()) {
                (Some(v), _) => v,
                (None, Some(true)) | (None, None) => 0.0,
                (None, Some(false)) => {
                    return Err(AgentError::IncompleteBuffer(
                        "unfinished trajectory without a bootstrap value".into(),
                    ))
                }
            };
            let (adv, ret) = compute_gae(&tr.rewards, &tr.values, &tr.dones, bootstrap, gamma, lambda)?;
            buf.observations.extend(tr.observations);
            buf.actions.extend(tr.actions);
            buf.log_probs.extend(tr.log_probs);
            buf.values.extend(tr.values);
            buf.rewards.extend(tr.rewards);
            buf.dones.extend(tr.dones);
            buf.advantages.extend(adv);
            buf.returns.extend(ret);
        }
        Ok(buf)
    }

    /// Shifts and scales advantages to zero mean and unit variance.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len();
        if n < 2 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n as f64;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for a in &mut self.advantages {
            *a -= mean;
        }
        if std > 1e-12 {
            for a in &mut self.advantages {
                *a /= std;
            }
        }
        // second pass removes the rounding residue of the first mean
        let residue = self.advantages.iter().sum::<f64>() / n as f64;
        for a in &mut self.advantages {
            *a -= residue;
        }
    }
}
