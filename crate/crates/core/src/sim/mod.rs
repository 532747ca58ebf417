//! Two-vehicle episodic racing simulation under perfect trajectory tracking.
//!
//! Every step the ego plans with the weight set chosen by its policy, the
//! opponent acts according to its kind, and both vehicles then follow their
//! committed trajectories for exactly one replanning interval.

mod lap;
mod metrics;
mod opponent;
mod reward;

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Footprint, OrientedRect};
use crate::planner::{
    identify_start_state, plan, predict_opponent, start_state_from_vehicle, CandidateTrajectory, Mode, ObservedVehicle,
    PlannerConfig, PlannerError, StartState, TrajPoint, WeightLibrary,
};
use crate::track::{wrap_angle, TrackDefinition};

pub use lap::{run_lap, LapPoint, LapResult};
pub use metrics::{compute_metrics, format_table, MetricsTable};
pub use opponent::{braking_fallback, raceline_follow};
pub use reward::{compute_reward, GapSign, InteractionZone, RewardBreakdown, RewardConfig, RewardState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no episodes to aggregate")]
    EmptyInput,
    #[error("episode already finished")]
    EpisodeDone,
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("log output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("log encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentKind {
    /// Replays its raceline with an acceleration-limited speed profile.
    NonReactive,
    /// Runs the planner with nominal racing weights, treating the ego as an obstacle.
    ReactiveNr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    NoFeasible,
    OffTrack,
    Timeout,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Collision | Outcome::NoFeasible | Outcome::OffTrack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub ego_start_s: f64,
    pub opp_start_s: f64,
    pub opponent_kind: OpponentKind,
    /// Opponent acceleration limits as a fraction of the ego's.
    pub opp_accel_scale: f64,
    pub max_steps: usize,
    /// Lead at which the current opponent is replaced by a fresh one.
    pub respawn_lead: f64,
    /// Lead that counts as a completed overtake.
    pub overtake_lead: f64,
    /// The episode succeeds once this many overtakes are complete; 0 runs
    /// until `max_steps`.
    pub overtakes_to_finish: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ego_start_s: 0.0,
            opp_start_s: 60.0,
            opponent_kind: OpponentKind::ReactiveNr,
            opp_accel_scale: 0.9,
            max_steps: 400,
            respawn_lead: 100.0,
            overtake_lead: 15.0,
            overtakes_to_finish: 1,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: &str| Err(SimError::InvalidScenario(m.into()));
        if !(self.opp_start_s > self.ego_start_s) {
            return err("opponent must start ahead of the ego");
        }
        if !(self.opp_accel_scale > 0.0 && self.opp_accel_scale <= 1.0) {
            return err("opp_accel_scale must lie in (0, 1]");
        }
        if self.max_steps == 0 {
            return err("max_steps must be at least 1");
        }
        if !(self.overtake_lead > 0.0 && self.respawn_lead >= self.overtake_lead) {
            return err("need 0 < overtake_lead <= respawn_lead");
        }
        Ok(())
    }

    /// Copy with a seeded start section and initial gap.
    pub fn randomized(&self, seed: u64, lap_length: f64, gap_range: [f64; 2]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ego_start_s = rng.gen_range(0.0..lap_length);
        let gap = if gap_range[1] > gap_range[0] {
            rng.gen_range(gap_range[0]..=gap_range[1])
        } else {
            gap_range[0]
        };
        Self {
            ego_start_s,
            opp_start_s: ego_start_s + gap,
            seed,
            ..*self
        }
    }
}

/// Everything about the simulation that is not scenario-specific.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub planner: PlannerConfig,
    pub weights: WeightLibrary,
    pub reward: RewardConfig,
    /// A reactive opponent plans around the ego only once the ego is at
    /// most this far behind it.
    pub opp_rear_awareness: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            weights: WeightLibrary::default(),
            reward: RewardConfig::default(),
            opp_rear_awareness: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    /// Unwrapped progress.
    pub s: f64,
    pub n: f64,
    /// Heading relative to the reference tangent.
    pub mu: f64,
    pub v: f64,
    pub a_long: f64,
    pub a_lat: f64,
    pub kappa: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    /// Frenet state the next planning cycle starts from.
    pub start: StartState,
    pub committed: Option<CandidateTrajectory>,
    pub footprint: Footprint,
    pub lap_count: i64,
}

impl VehicleState {
    /// A vehicle on the raceline at `s`, heading along it at speed `v`.
    pub fn on_raceline(track: &TrackDefinition, s: f64, v: f64, footprint: Footprint) -> Self {
        let r = track.reference(s);
        let n = r.n_raceline;
        let one_minus = 1.0 - n * r.kappa;
        let mu = (track.raceline_slope(s) / one_minus).atan();
        let (sin, cos) = r.psi.sin_cos();
        Self {
            s,
            n,
            mu,
            v,
            a_long: 0.0,
            a_lat: 0.0,
            kappa: r.kappa / one_minus,
            x: r.x - n * sin,
            y: r.y + n * cos,
            psi: r.psi + mu,
            start: start_state_from_vehicle(track, s, n, v, mu, 0.0),
            committed: None,
            footprint,
            lap_count: track.lap_index(s),
        }
    }

    fn set_point(&mut self, track: &TrackDefinition, p: &TrajPoint) {
        self.s = p.s;
        self.n = p.n;
        self.mu = wrap_angle(p.psi - track.reference(p.s).psi);
        self.v = p.v;
        self.a_long = p.a_long;
        self.a_lat = p.a_lat;
        self.kappa = p.kappa_path;
        self.x = p.x;
        self.y = p.y;
        self.psi = p.psi;
        self.lap_count = track.lap_index(p.s);
    }

    /// Follows `traj` for `replan_dt` and commits to it.
    fn advance(&mut self, track: &TrackDefinition, traj: CandidateTrajectory, replan_dt: f64) -> Result<(), SimError> {
        self.start = identify_start_state(&traj, replan_dt)?;
        let k = ((replan_dt / traj.dt()).round() as usize).min(traj.points.len() - 1);
        self.set_point(track, &traj.points[k]);
        self.committed = Some(traj);
        Ok(())
    }

    pub fn observed(&self) -> ObservedVehicle {
        ObservedVehicle {
            s: self.s,
            n: self.n,
            s_dot: self.start.s_dot,
            mu: self.mu,
            footprint: self.footprint,
        }
    }

    pub fn rect(&self) -> OrientedRect {
        self.footprint.at(self.x, self.y, self.psi)
    }
}

/// Footprint overlap at the current poses (closed convention).
pub fn detect_collision(ego: &VehicleState, opp: &VehicleState) -> bool {
    ego.rect().overlaps(&opp.rect())
}

pub fn in_interaction_zone(ego: &VehicleState, opp: &VehicleState, zone: &InteractionZone) -> bool {
    zone.contains(ego.s - opp.s, ego.n - opp.n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub s: f64,
    pub n: f64,
    pub v: f64,
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub ego: VehicleSnapshot,
    pub opp: VehicleSnapshot,
    pub action: Mode,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub zone: bool,
    pub done: bool,
    pub outcome: Option<Outcome>,
    pub overtakes: usize,
    pub respawned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    /// Time from each opponent's spawn to the overtake, in seconds.
    pub overtake_times: Vec<f64>,
    pub overtakes_completed: usize,
    /// Laps driven by the ego.
    pub laps: f64,
    pub reward_trace: Vec<f64>,
    /// Steps spent in each mode, indexed like [`Mode::ALL`].
    pub mode_counts: [usize; 3],
    /// Steps in which the opponent had to brake for lack of a feasible plan.
    pub opponent_fallbacks: usize,
    pub records: Vec<StepRecord>,
}

impl EpisodeResult {
    pub fn total_reward(&self) -> f64 {
        self.reward_trace.iter().sum()
    }

    /// Writes the step log as JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub struct RaceEnv {
    track: Arc<TrackDefinition>,
    config: SimConfig,
    scenario: ScenarioConfig,
    opp_planner: PlannerConfig,
    opp_speed_scale: f64,
    ego: VehicleState,
    opp: VehicleState,
    steps: usize,
    opp_spawn_step: usize,
    opp_overtaken: bool,
    overtake_times: Vec<f64>,
    opp_fallbacks: usize,
    outcome: Option<Outcome>,
}

impl RaceEnv {
    pub fn new(track: Arc<TrackDefinition>, config: SimConfig, scenario: ScenarioConfig) -> Result<Self, SimError> {
        config.planner.validate()?;
        config.weights.validate()?;
        config.reward.validate().map_err(SimError::InvalidScenario)?;
        scenario.validate()?;
        let scale = scenario.opp_accel_scale;
        let opp_speed_scale = config.planner.target_speed_scale * scale.sqrt();
        let opp_planner = PlannerConfig {
            limits: config.planner.limits.with_acceleration_scale(scale),
            target_speed_scale: opp_speed_scale,
            ..config.planner
        };
        let fp = config.planner.footprint;
        let ego = VehicleState::on_raceline(
            &track,
            scenario.ego_start_s,
            track.reference(scenario.ego_start_s).v_raceline,
            fp,
        );
        let opp_v = opp_speed_scale * track.reference(scenario.opp_start_s).v_raceline;
        let opp = VehicleState::on_raceline(&track, scenario.opp_start_s, opp_v, fp);
        Ok(Self {
            track,
            config,
            scenario,
            opp_planner,
            opp_speed_scale,
            ego,
            opp,
            steps: 0,
            opp_spawn_step: 0,
            opp_overtaken: false,
            overtake_times: Vec::new(),
            opp_fallbacks: 0,
            outcome: None,
        })
    }

    /// Restarts with a new scenario, keeping track and configuration.
    pub fn reset(&mut self, scenario: ScenarioConfig) -> Result<(), SimError> {
        *self = Self::new(self.track.clone(), self.config, scenario)?;
        Ok(())
    }

    pub fn track(&self) -> &TrackDefinition {
        &self.track
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn opponent(&self) -> &VehicleState {
        &self.opp
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.planner.replan_dt
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn overtake_times(&self) -> &[f64] {
        &self.overtake_times
    }

    /// Laps driven by the ego since the start of the episode.
    pub fn laps(&self) -> f64 {
        (self.ego.s - self.scenario.ego_start_s) / self.track.lap_length()
    }

    fn reward_state(&self) -> RewardState {
        let r = self.track.reference(self.ego.s);
        RewardState {
            s: self.ego.s,
            n: self.ego.n,
            v: self.ego.v,
            n_raceline: r.n_raceline,
            v_target: self.config.planner.target_speed_scale * r.v_raceline,
            opponent: Some((self.opp.s, self.opp.n)),
        }
    }

    /// Steps in which the opponent found no feasible plan and braked.
    pub fn opponent_fallbacks(&self) -> usize {
        self.opp_fallbacks
    }

    fn opponent_trajectory(&mut self) -> Result<CandidateTrajectory, SimError> {
        let track = &*self.track;
        let cfg = &self.opp_planner;
        Ok(match self.scenario.opponent_kind {
            OpponentKind::NonReactive => raceline_follow(track, self.opp.s, self.opp.v, self.opp_speed_scale, cfg),
            OpponentKind::ReactiveNr => {
                let aware = self.ego.s - self.opp.s >= -self.config.opp_rear_awareness;
                let ego_pred = aware.then(|| predict_opponent(&self.ego.observed(), track, cfg));
                match plan(
                    &self.opp.start,
                    track,
                    &self.config.weights.nominal_racing,
                    ego_pred.as_ref(),
                    cfg,
                ) {
                    Ok(out) => out.best,
                    Err(PlannerError::NoFeasibleTrajectory { .. }) => {
                        self.opp_fallbacks += 1;
                        braking_fallback(track, &self.opp.start, cfg.limits.ax_max, cfg)
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        })
    }

    /// Advances the episode by one planning step with the ego in `mode`.
    pub fn step(&mut self, mode: Mode) -> Result<StepRecord, SimError> {
        if self.is_done() {
            return Err(SimError::EpisodeDone);
        }
        let track = self.track.clone();
        let planner = self.config.planner;
        let prev = self.reward_state();

        let opp_pred = predict_opponent(&self.opp.observed(), &track, &planner);
        let weights = self.config.weights.get(mode);
        let (ego_traj, ego_failed) = match plan(&self.ego.start, &track, weights, Some(&opp_pred), &planner) {
            Ok(out) => (out.best, false),
            Err(PlannerError::NoFeasibleTrajectory { .. }) => (
                braking_fallback(&track, &self.ego.start, planner.limits.ax_max, &planner),
                true,
            ),
            Err(e) => return Err(e.into()),
        };
        let opp_traj = self.opponent_trajectory()?;

        // contact anywhere within the interval, not only at its end
        let m = planner.replan_steps();
        let collided = (1..=m).any(|k| {
            let (a, b) = (&ego_traj.points[k], &opp_traj.points[k]);
            self.ego
                .footprint
                .at(a.x, a.y, a.psi)
                .overlaps(&self.opp.footprint.at(b.x, b.y, b.psi))
        });

        self.ego.advance(&track, ego_traj, planner.replan_dt)?;
        self.opp.advance(&track, opp_traj, planner.replan_dt)?;
        self.steps += 1;

        let r = track.reference(self.ego.s);
        let mut outcome = if ego_failed {
            Some(Outcome::NoFeasible)
        } else if collided || detect_collision(&self.ego, &self.opp) {
            Some(Outcome::Collision)
        } else if !(r.n_min <= self.ego.n && self.ego.n <= r.n_max) {
            Some(Outcome::OffTrack)
        } else {
            None
        };
        let zone = in_interaction_zone(&self.ego, &self.opp, &self.config.reward.zone);
        let cur = self.reward_state();
        let opp_snapshot = VehicleSnapshot {
            s: self.opp.s,
            n: self.opp.n,
            v: self.opp.v,
        };

        let mut respawned = false;
        if outcome.is_none() {
            let lead = self.ego.s - self.opp.s;
            if !self.opp_overtaken && lead >= self.scenario.overtake_lead {
                self.opp_overtaken = true;
                self.overtake_times
                    .push((self.steps - self.opp_spawn_step) as f64 * planner.replan_dt);
            }
            let target = self.scenario.overtakes_to_finish;
            if target > 0 && self.overtake_times.len() >= target {
                outcome = Some(Outcome::Success);
            } else if lead >= self.scenario.respawn_lead {
                let gap = self.scenario.opp_start_s - self.scenario.ego_start_s;
                let s = self.ego.s + gap;
                let v = self.opp_speed_scale * track.reference(s).v_raceline;
                self.opp = VehicleState::on_raceline(&track, s, v, self.opp.footprint);
                self.opp_spawn_step = self.steps;
                self.opp_overtaken = false;
                respawned = true;
            }
            if outcome.is_none() && self.steps >= self.scenario.max_steps {
                let ahead = self.ego.s - self.opp.s >= self.scenario.overtake_lead || respawned;
                outcome = Some(if target == 0 && !self.overtake_times.is_empty() && ahead {
                    Outcome::Success
                } else {
                    Outcome::Timeout
                });
            }
        }
        self.outcome = outcome;

        let (reward, breakdown) = compute_reward(&prev, &cur, zone, outcome, &self.config.reward);
        Ok(StepRecord {
            t: self.time(),
            ego: VehicleSnapshot {
                s: self.ego.s,
                n: self.ego.n,
                v: self.ego.v,
            },
            opp: opp_snapshot,
            action: mode,
            reward,
            breakdown,
            zone,
            done: outcome.is_some(),
            outcome,
            overtakes: self.overtake_times.len(),
            respawned,
        })
    }
}

/// Runs one episode to termination, asking `policy` for a mode each step.
pub fn run_scenario(
    track: Arc<TrackDefinition>,
    config: &SimConfig,
    scenario: &ScenarioConfig,
    policy: &mut dyn FnMut(&RaceEnv) -> Mode,
) -> Result<EpisodeResult, SimError> {
    let mut env = RaceEnv::new(track, *config, *scenario)?;
    let mut records = Vec::new();
    let mut mode_counts = [0usize; 3];
    while !env.is_done() {
        let mode = policy(&env);
        mode_counts[mode.index()] += 1;
        records.push(env.step(mode)?);
    }
    Ok(EpisodeResult {
        seed: scenario.seed,
        outcome: env.outcome().expect("finished episode has an outcome"),
        steps: env.steps(),
        overtake_times: env.overtake_times().to_vec(),
        overtakes_completed: env.overtake_times().len(),
        laps: env.laps(),
        reward_trace: records.iter().map(|r| r.reward).collect(),
        mode_counts,
        opponent_fallbacks: env.opponent_fallbacks(),
        records,
    })
}

#[cfg(test)]
mod tests;
