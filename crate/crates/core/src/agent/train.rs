//! Parallel-rollout PPO training.
//!
//! Training runs in segments of `checkpoint_every` updates. Every segment
//! starts from freshly reset environments whose random streams derive from
//! `(seed, segment, env)`, so a run resumed from a segment checkpoint
//! continues exactly as the uninterrupted run would have.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::buffer::{RolloutBuffer, Trajectory};
use super::model::{ActorCritic, ModelConfig};
use super::observation::{build_observation, Observation, ObservationConfig};
use super::ppo::{ppo_update, LossStats, PpoConfig};
use super::AgentError;
use crate::neural::{AdamState, Checkpoint};
use crate::planner::{Mode, WeightLibrary};
use crate::sim::{OpponentKind, RaceEnv, ScenarioConfig, SimConfig};
use crate::track::TrackDefinition;

/// An episodic environment the trainer can drive.
pub trait RolloutEnv: Send {
    fn observe(&self) -> Observation;
    /// Applies `mode` and returns the reward and whether the episode ended.
    fn step(&mut self, mode: Mode) -> Result<(f64, bool), AgentError>;
    /// Starts a new episode drawn from `rng`.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<(), AgentError>;
}

/// How training and evaluation scenarios are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioDistribution {
    pub base: ScenarioConfig,
    pub gap_range: [f64; 2],
    /// Probability of a non-reactive opponent.
    pub opponent_mix: f64,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::default(),
            gap_range: [40.0, 80.0],
            opponent_mix: 0.5,
        }
    }
}

impl ScenarioDistribution {
    /// Scenario for `seed`: uniform start over the lap, uniform gap, opponent
    /// kind by `opponent_mix`.
    pub fn sample(&self, seed: u64, lap_length: f64) -> ScenarioConfig {
        let mut sc = self.base.randomized(seed, lap_length, self.gap_range);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        sc.opponent_kind = if rng.gen_bool(self.opponent_mix) {
            OpponentKind::NonReactive
        } else {
            OpponentKind::ReactiveNr
        };
        sc
    }

    /// Scenario for `seed` against a fixed opponent kind.
    pub fn sample_with(&self, seed: u64, lap_length: f64, kind: OpponentKind) -> ScenarioConfig {
        ScenarioConfig {
            opponent_kind: kind,
            ..self.base.randomized(seed, lap_length, self.gap_range)
        }
    }
}

/// [`RaceEnv`] seen through the policy's observation.
pub struct RaceTrainEnv {
    env: RaceEnv,
    obs: ObservationConfig,
    dist: ScenarioDistribution,
}

impl RaceTrainEnv {
    pub fn new(
        track: Arc<TrackDefinition>,
        sim: SimConfig,
        obs: ObservationConfig,
        dist: ScenarioDistribution,
    ) -> Result<Self, AgentError> {
        let first = dist.sample(0, track.lap_length());
        Ok(Self {
            env: RaceEnv::new(track, sim, first)?,
            obs,
            dist,
        })
    }
}

impl RolloutEnv for RaceTrainEnv {
    fn observe(&self) -> Observation {
        build_observation(&self.env, &self.obs)
    }

    fn step(&mut self, mode: Mode) -> Result<(f64, bool), AgentError> {
        let rec = self.env.step(mode)?;
        Ok((rec.reward, rec.done))
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        let sc = self.dist.sample(rng.gen(), self.env.track().lap_length());
        self.env.reset(sc)?;
        Ok(())
    }
}

/// One-step episodes with a fixed reward per mode and a constant observation.
pub struct BanditEnv {
    pub rewards: [f64; 3],
    obs: Observation,
}

impl BanditEnv {
    pub fn new(rewards: [f64; 3], cfg: &ObservationConfig) -> Self {
        let [c, l] = cfg.track_shape();
        Self {
            rewards,
            obs: Observation {
                ego: [0.0; 7],
                opponent: [0.0, 0.0, 0.0, -1.0],
                track: vec![0.0; c * l],
            },
        }
    }
}

impl RolloutEnv for BanditEnv {
    fn observe(&self) -> Observation {
        self.obs.clone()
    }

    fn step(&mut self, mode: Mode) -> Result<(f64, bool), AgentError> {
        Ok((self.rewards[mode.index()], true))
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub ppo: PpoConfig,
    pub model: ModelConfig,
    pub observation: ObservationConfig,
    /// Updates per segment; a checkpoint is emitted after each segment.
    pub checkpoint_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig::default(),
            model: ModelConfig::default(),
            observation: ObservationConfig::default(),
            checkpoint_every: 5,
            seed: 0,
        }
    }
}

/// Everything besides the network needed to use or resume a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub train: TrainConfig,
    pub weights: WeightLibrary,
    pub updates: usize,
    pub steps: u64,
}

pub type AgentCheckpoint = Checkpoint<AgentMeta>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub update: usize,
    pub steps: u64,
    /// Mean undiscounted return of episodes finished during the update.
    pub mean_reward: f64,
    pub episodes: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub approx_kl: f64,
}

pub const CURVE_HEADER: &str = "update,steps,mean_reward,policy_loss,value_loss,entropy,clip_frac";

impl CurveRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.update, self.steps, self.mean_reward, self.policy_loss, self.value_loss, self.entropy, self.clip_frac
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub checkpoint: AgentCheckpoint,
    pub curve: Vec<CurveRow>,
}

struct Slot<E> {
    env: E,
    rng: ChaCha8Rng,
    running: f64,
}

impl<E: RolloutEnv> Slot<E> {
    fn collect(
        &mut self,
        model: &ActorCritic,
        len: usize,
        reward_scale: f64,
    ) -> Result<(Trajectory, Vec<f64>), AgentError> {
        let mut tr = Trajectory::default();
        let mut finished = Vec::new();
        for _ in 0..len {
            let obs = self.env.observe();
            let out = model.policy_forward(&obs)?;
            let a = out.dist.sample(&mut self.rng);
            let (r, done) = self.env.step(Mode::from_index(a).expect("three actions"))?;
            self.running += r;
            tr.push(obs, a, out.dist.log_prob(a), out.value, r * reward_scale, done);
            if done {
                finished.push(self.running);
                self.running = 0.0;
                self.env.reset(&mut self.rng)?;
            }
        }
        tr.bootstrap = Some(if tr.dones.last() == Some(&true) {
            0.0
        } else {
            model.policy_forward(&self.env.observe())?.value
        });
        Ok((tr, finished))
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trains from scratch, or continues `resume`, until `total_steps`.
///
/// `make_env(i)` builds environment `i`. `on_checkpoint` sees every segment
/// checkpoint and the curve so far.
/// Called with each saved checkpoint and the learning curve so far.
pub type CheckpointHook<'a> = dyn FnMut(&AgentCheckpoint, &[CurveRow]) -> Result<(), AgentError> + 'a;

pub fn train<E, F>(
    cfg: &TrainConfig,
    weights: WeightLibrary,
    make_env: F,
    resume: Option<AgentCheckpoint>,
    on_checkpoint: &mut CheckpointHook,
) -> Result<TrainOutcome, AgentError>
where
    E: RolloutEnv,
    F: Fn(usize) -> Result<E, AgentError>,
{
    cfg.ppo.validate()?;
    if cfg.checkpoint_every == 0 {
        return Err(AgentError::InvalidConfig("checkpoint_every must be positive".into()));
    }
    let ppo = cfg.ppo;
    let (mut model, mut adam, mut rng, start_update) = match resume {
        Some(ck) => {
            // the step budget may grow on resume; everything else must match
            let mut same = ck.meta.train;
            same.ppo.total_steps = cfg.ppo.total_steps;
            if same != *cfg {
                return Err(AgentError::CheckpointMismatch(
                    "training configuration differs from the checkpoint".into(),
                ));
            }
            if ck.meta.updates % cfg.checkpoint_every != 0 {
                return Err(AgentError::CheckpointMismatch(
                    "checkpoint is not at a segment boundary".into(),
                ));
            }
            let model = ActorCritic {
                net: ck.network()?,
                obs: cfg.observation,
            };
            check_architecture(&model, &cfg.model)?;
            (model, ck.adam, ck.rng, ck.meta.updates)
        }
        None => {
            let mut init_rng = stream_rng(cfg.seed, 0);
            let model = ActorCritic::new(&cfg.model, cfg.observation, &mut init_rng)?;
            let adam = AdamState::new(model.net.param_count(), ppo.lr);
            (model, adam, init_rng, 0)
        }
    };

    let total_updates = ppo.total_steps.div_ceil(ppo.steps_per_update()) as usize;
    let mut slots: Vec<Slot<E>> = (0..ppo.n_envs)
        .map(|i| {
            Ok(Slot {
                env: make_env(i)?,
                rng: ChaCha8Rng::seed_from_u64(0),
                running: 0.0,
            })
        })
        .collect::<Result<_, AgentError>>()?;
    let mut curve = Vec::new();
    let mut checkpoint = AgentCheckpoint::new(
        &model.net,
        adam.clone(),
        rng.clone(),
        AgentMeta {
            train: *cfg,
            weights,
            updates: start_update,
            steps: start_update as u64 * ppo.steps_per_update(),
        },
    );

    for update in start_update..total_updates {
        if update % cfg.checkpoint_every == 0 {
            let segment = (update / cfg.checkpoint_every) as u64;
            for (i, slot) in slots.iter_mut().enumerate() {
                slot.rng = stream_rng(cfg.seed, 1 + segment * ppo.n_envs as u64 + i as u64);
                slot.running = 0.0;
                slot.env.reset(&mut slot.rng)?;
            }
        }
        let frozen = &model;
        let collected: Vec<(Trajectory, Vec<f64>)> = slots
            .par_iter_mut()
            .map(|s| s.collect(frozen, ppo.rollout_len, ppo.reward_scale))
            .collect::<Result<_, _>>()?;
        let mut returns = Vec::new();
        let mut trajectories = Vec::with_capacity(collected.len());
        for (tr, fin) in collected {
            trajectories.push(tr);
            returns.extend(fin);
        }
        let mut buffer = RolloutBuffer::assemble(trajectories, ppo.gamma, ppo.lambda_gae)?;
        if ppo.normalize_advantages {
            buffer.normalize_advantages();
        }
        let stats: LossStats = ppo_update(&buffer, &mut model, &mut adam, &ppo, &mut rng)?;
        let steps = (update as u64 + 1) * ppo.steps_per_update();
        curve.push(CurveRow {
            update: update + 1,
            steps,
            mean_reward: if returns.is_empty() {
                f64::NAN
            } else {
                returns.iter().sum::<f64>() / returns.len() as f64
            },
            episodes: returns.len(),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            clip_frac: stats.clip_fraction,
            approx_kl: stats.approx_kl,
        });
        if (update + 1) % cfg.checkpoint_every == 0 || update + 1 == total_updates {
            checkpoint = AgentCheckpoint::new(
                &model.net,
                adam.clone(),
                rng.clone(),
                AgentMeta {
                    train: *cfg,
                    weights,
                    updates: update + 1,
                    steps,
                },
            );
            on_checkpoint(&checkpoint, &curve)?;
        }
    }
    Ok(TrainOutcome {
        model,
        checkpoint,
        curve,
    })
}

pub(crate) fn check_architecture(model: &ActorCritic, cfg: &ModelConfig) -> Result<(), AgentError> {
    if model.net.spec() != &cfg.network_spec(&model.obs) {
        return Err(AgentError::CheckpointMismatch(
            "network does not match the observation layout".into(),
        ));
    }
    Ok(())
}

/// Trains on the race environment over `track`.
pub fn train_race(
    cfg: &TrainConfig,
    track: Arc<TrackDefinition>,
    sim: SimConfig,
    dist: ScenarioDistribution,
    resume: Option<AgentCheckpoint>,
    on_checkpoint: &mut CheckpointHook,
) -> Result<TrainOutcome, AgentError> {
    let dist = ScenarioDistribution {
        opponent_mix: cfg.ppo.opponent_mix,
        ..dist
    };
    train(
        cfg,
        sim.weights,
        |_| RaceTrainEnv::new(track.clone(), sim, cfg.observation, dist),
        resume,
        on_checkpoint,
    )
}
