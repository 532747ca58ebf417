use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ActorCritic;
use super::observation::build_observation;
use super::train::{check_architecture, AgentCheckpoint};
use super::AgentError;
use crate::planner::Mode;
use crate::sim::{compute_metrics, run_scenario, EpisodeResult, MetricsTable, ScenarioConfig, SimConfig};
use crate::track::TrackDefinition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: MetricsTable,
    /// Steps per mode, indexed like [`Mode::ALL`].
    pub action_histogram: [usize; 3],
    /// For each episode with at least one overtake, the number of distinct
    /// modes it used.
    pub modes_per_overtaking_episode: Vec<usize>,
    #[serde(skip)]
    pub results: Vec<EpisodeResult>,
}

impl EvalReport {
    pub fn from_results(results: Vec<EpisodeResult>) -> Result<Self, AgentError> {
        let metrics = compute_metrics(&results)?;
        let mut action_histogram = [0; 3];
        let mut modes_per_overtaking_episode = Vec::new();
        for r in &results {
            for (h, c) in action_histogram.iter_mut().zip(r.mode_counts) {
                *h += c;
            }
            if r.overtakes_completed > 0 {
                modes_per_overtaking_episode.push(r.mode_counts.iter().filter(|&&c| c > 0).count());
            }
        }
        Ok(Self {
            metrics,
            action_histogram,
            modes_per_overtaking_episode,
            results,
        })
    }

    pub fn max_modes_in_overtake(&self) -> usize {
        self.modes_per_overtaking_episode.iter().copied().max().unwrap_or(0)
    }

    pub fn histogram_line(&self) -> String {
        let total: usize = self.action_histogram.iter().sum();
        Mode::ALL
            .iter()
            .zip(self.action_histogram)
            .map(|(m, c)| format!("{m} {:.1}%", 100.0 * c as f64 / total.max(1) as f64))
            .collect::<Vec<_>>()
            .join("  ")
    }
}

/// Runs every scenario with `policy` choosing modes. Episodes run in
/// parallel; results keep scenario order.
pub fn evaluate_with<P>(
    track: Arc<TrackDefinition>,
    sim: &SimConfig,
    scenarios: &[ScenarioConfig],
    policy: P,
) -> Result<EvalReport, AgentError>
where
    P: Fn(&crate::sim::RaceEnv) -> Mode + Sync,
{
    let results: Vec<EpisodeResult> = scenarios
        .par_iter()
        .map(|sc| run_scenario(track.clone(), sim, sc, &mut |env| policy(env)))
        .collect::<Result<_, _>>()?;
    EvalReport::from_results(results)
}

/// Greedy evaluation of a trained policy.
pub fn evaluate(
    model: &ActorCritic,
    track: Arc<TrackDefinition>,
    sim: &SimConfig,
    scenarios: &[ScenarioConfig],
) -> Result<EvalReport, AgentError> {
    evaluate_with(track, sim, scenarios, |env| {
        let obs = build_observation(env, &model.obs);
        // observations are bounded and the network is finite, so this only
        // fails on a corrupted parameter vector
        model.act_greedy(&obs).unwrap_or(Mode::NominalRacing)
    })
}

/// Evaluates a static mode on the same scenarios.
pub fn evaluate_static(
    mode: Mode,
    track: Arc<TrackDefinition>,
    sim: &SimConfig,
    scenarios: &[ScenarioConfig],
) -> Result<EvalReport, AgentError> {
    evaluate_with(track, sim, scenarios, move |_| mode)
}

/// Loads the policy stored in `ck`, checking it against its recorded layout.
pub fn policy_from_checkpoint(ck: &AgentCheckpoint) -> Result<ActorCritic, AgentError> {
    let model = ActorCritic {
        net: ck.network()?,
        obs: ck.meta.train.observation,
    };
    check_architecture(&model, &ck.meta.train.model)?;
    if model.net.params.iter().any(|p| !p.is_finite()) {
        return Err(AgentError::CheckpointMismatch("non-finite parameters".into()));
    }
    Ok(model)
}
