//! Run configuration: one TOML file, defaults for every key, dotted-key
//! overrides on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::agent::{ScenarioDistribution, TrainConfig};
use crate::planner::{PlannerConfig, WeightLibrary};
use crate::sim::{OpponentKind, RewardConfig, ScenarioConfig, SimConfig};
use crate::track::{load_track, synth_track, SynthKind, SynthParams, TrackDefinition};

/// A track file or a synthetic track recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackSpec {
    /// CSV track file; overrides the synthetic recipe when set.
    pub path: Option<PathBuf>,
    pub synth: SynthKind,
    pub params: SynthParams,
    pub seed: u64,
}

impl Default for TrackSpec {
    fn default() -> Self {
        Self {
            path: None,
            synth: SynthKind::Oval {
                straight: 250.0,
                radius: 60.0,
            },
            params: SynthParams::default(),
            seed: 0,
        }
    }
}

impl TrackSpec {
    /// Held-out track for generalization runs.
    pub fn unseen_default() -> Self {
        Self {
            synth: SynthKind::RandomLoop {
                mean_radius: 150.0,
                harmonics: 4,
                roughness: 0.25,
            },
            seed: 1,
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<TrackDefinition, BenchError> {
        Ok(match &self.path {
            Some(p) => load_track(p)?,
            None => synth_track(&self.synth, &self.params, self.seed)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentChoice {
    NonReactive,
    ReactiveNr,
    /// Drawn per scenario with the training opponent mix.
    Mix,
}

/// Seeded scenario batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSpec {
    pub count: usize,
    pub first_seed: u64,
    pub opponent: OpponentChoice,
    pub gap_range: [f64; 2],
    pub max_steps: usize,
    pub opp_accel_scale: f64,
    pub respawn_lead: f64,
    pub overtake_lead: f64,
    pub overtakes_to_finish: usize,
}

impl Default for BatchSpec {
    fn default() -> Self {
        let base = ScenarioConfig::default();
        Self {
            count: 50,
            first_seed: 1_000_000,
            opponent: OpponentChoice::ReactiveNr,
            gap_range: [40.0, 80.0],
            max_steps: base.max_steps,
            opp_accel_scale: base.opp_accel_scale,
            respawn_lead: base.respawn_lead,
            overtake_lead: base.overtake_lead,
            overtakes_to_finish: base.overtakes_to_finish,
        }
    }
}

impl BatchSpec {
    pub fn distribution(&self, opponent_mix: f64) -> ScenarioDistribution {
        ScenarioDistribution {
            base: ScenarioConfig {
                max_steps: self.max_steps,
                opp_accel_scale: self.opp_accel_scale,
                respawn_lead: self.respawn_lead,
                overtake_lead: self.overtake_lead,
                overtakes_to_finish: self.overtakes_to_finish,
                ..ScenarioConfig::default()
            },
            gap_range: self.gap_range,
            opponent_mix,
        }
    }

    /// The batch, ordered by seed.
    pub fn scenarios(&self, lap_length: f64, opponent_mix: f64) -> Vec<ScenarioConfig> {
        let d = self.distribution(opponent_mix);
        (0..self.count as u64)
            .map(|i| {
                let seed = self.first_seed + i;
                match self.opponent {
                    OpponentChoice::Mix => d.sample(seed, lap_length),
                    OpponentChoice::NonReactive => d.sample_with(seed, lap_length, OpponentKind::NonReactive),
                    OpponentChoice::ReactiveNr => d.sample_with(seed, lap_length, OpponentKind::ReactiveNr),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpponentConfig {
    /// How far behind the reactive opponent starts planning around the ego.
    pub rear_awareness: f64,
}

impl Default for OpponentConfig {
    fn default() -> Self {
        Self {
            rear_awareness: SimConfig::default().opp_rear_awareness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub n_cycles: usize,
    pub warmup: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            n_cycles: 200,
            warmup: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainExtras {
    /// Evaluation-batch episodes run greedily after every checkpoint.
    pub snapshot_episodes: usize,
    /// Length of a training episode. Opponents keep respawning until then.
    pub episode_steps: usize,
    /// Overtakes that end a training episode early; 0 never ends it early.
    /// Ending early pays slow overtakes with a longer stream of progress
    /// reward, so the default keeps every episode the same length.
    pub overtakes_to_finish: usize,
}

impl Default for TrainExtras {
    fn default() -> Self {
        Self {
            snapshot_episodes: 8,
            episode_steps: 200,
            overtakes_to_finish: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub track: TrackSpec,
    pub unseen_track: TrackSpec,
    pub planner: PlannerConfig,
    pub weights: WeightLibrary,
    pub reward: RewardConfig,
    pub opponent: OpponentConfig,
    pub scenarios: BatchSpec,
    pub train: TrainConfig,
    pub train_extras: TrainExtras,
    pub timing: TimingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("runs"),
            track: TrackSpec::default(),
            unseen_track: TrackSpec::unseen_default(),
            planner: PlannerConfig::default(),
            weights: WeightLibrary::default(),
            reward: RewardConfig::default(),
            opponent: OpponentConfig::default(),
            scenarios: BatchSpec::default(),
            train: TrainConfig::default(),
            train_extras: TrainExtras::default(),
            timing: TimingConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses `text` after applying `key=value` overrides with dotted keys.
    /// Values are read as TOML literals, falling back to plain strings.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, BenchError> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if any) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, BenchError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String, BenchError> {
        toml::to_string_pretty(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let cfg = |e: String| BenchError::Config(e);
        self.planner.validate().map_err(|e| cfg(e.to_string()))?;
        self.weights.validate().map_err(|e| cfg(e.to_string()))?;
        self.reward.validate().map_err(cfg)?;
        self.train.ppo.validate().map_err(|e| cfg(e.to_string()))?;
        if let Some(p) = &self.track.path {
            if !p.exists() {
                return Err(cfg(format!("track file {} does not exist", p.display())));
            }
        }
        if self.train_extras.episode_steps == 0 {
            return Err(cfg("train_extras.episode_steps must be at least 1".into()));
        }
        if self.scenarios.gap_range[0] <= 0.0 || self.scenarios.gap_range[1] < self.scenarios.gap_range[0] {
            return Err(cfg("scenarios.gap_range must be positive and ordered".into()));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            planner: self.planner,
            weights: self.weights,
            reward: self.reward,
            opp_rear_awareness: self.opponent.rear_awareness,
        }
    }

    /// Scenario distribution used for training rollouts.
    pub fn train_distribution(&self) -> ScenarioDistribution {
        BatchSpec {
            max_steps: self.train_extras.episode_steps,
            overtakes_to_finish: self.train_extras.overtakes_to_finish,
            ..self.scenarios
        }
        .distribution(self.train.ppo.opponent_mix)
    }

    /// Training configuration with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train
        }
    }
}

fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), BenchError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| BenchError::Config(format!("override `{spec}` is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| BenchError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_with("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_toml_with("", &["seed=7".into(), "planner.cost.d_pr=5.5".into()]).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.planner.cost.d_pr, 5.5);
        let back = RunConfig::from_toml_with(&c.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_beat_file_values() {
        let text = "seed = 3\n[scenarios]\ncount = 10\n";
        let c = RunConfig::from_toml_with(text, &["scenarios.count=4".into(), "out=elsewhere".into()]).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.scenarios.count, 4);
        assert_eq!(c.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn weight_library_uses_mode_names() {
        let c = RunConfig::from_toml_with(
            "[weights.AG]\nw_rl = 2.0\nw_v = 10.0\nw_a = 200.0\nw_pr = 1e4\nw_c = 1.0\n",
            &[],
        )
        .unwrap();
        assert_eq!(c.weights.aggressive.w_rl, 2.0);
        assert!(RunConfig::from_toml_with("[weights.XX]\nw_rl = 1.0\n", &[]).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_with("", &["train.ppo.gamma=0".into()]).is_err());
        assert!(RunConfig::from_toml_with("", &["track.path=/no/such/file.csv".into()]).is_err());
        assert!(RunConfig::from_toml_with("bogus = 1", &[]).is_err());
        assert!(RunConfig::from_toml_with("", &["noequals".into()]).is_err());
    }

    #[test]
    fn batch_is_seed_ordered_and_reproducible() {
        let b = BatchSpec {
            count: 5,
            ..Default::default()
        };
        let a = b.scenarios(1000.0, 0.5);
        assert_eq!(a, b.scenarios(1000.0, 0.5));
        assert!(a.windows(2).all(|w| w[0].seed < w[1].seed));
        assert!(a.iter().all(|s| s.opponent_kind == OpponentKind::ReactiveNr));
    }
}
