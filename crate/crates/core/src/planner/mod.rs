//! Sampling-based Frenet trajectory planner.
//!
//! One planning cycle identifies the start state, generates a grid of
//! candidate trajectories (quartic longitudinal × quintic lateral profiles
//! over a fixed horizon), rejects every candidate that violates a hard
//! constraint at any point, and returns the feasible candidate of least
//! weighted cost.

mod assemble;
mod cost;
mod feasibility;
mod modes;
mod poly;
mod predict;
mod start;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Footprint;
use crate::track::TrackDefinition;

pub use assemble::{assemble_profile, assemble_trajectory, KinematicSample, STANDSTILL_SPEED};
pub use cost::{evaluate_cost, CostBreakdown, CostParams};
pub use feasibility::{check_feasibility, Constraint, Verdict};
pub use modes::{Mode, WeightLibrary};
pub use poly::{gen_lateral, gen_longitudinal, Quartic, Quintic, MIN_HORIZON};
pub use predict::{predict_opponent, ObservedVehicle, OpponentPrediction, PredictedPose};
pub use start::{identify_start_state, start_state_from_vehicle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("no feasible trajectory among {candidates} candidates (first rejection: {first_rejection:?})")]
    NoFeasibleTrajectory {
        candidates: usize,
        first_rejection: Option<Constraint>,
    },
    #[error("committed trajectory covers {available:.3} s, need {requested:.3} s")]
    HorizonExhausted { available: f64, requested: f64 },
    #[error("degenerate horizon {0}")]
    DegenerateHorizon(f64),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
}

/// Hard kinodynamic limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintLimits {
    pub kappa_max: f64,
    pub v_max: f64,
    /// Cap on positive longitudinal acceleration.
    pub ax_eng: f64,
    pub ax_max: f64,
    pub ay_max: f64,
    /// Exponent of the gg-diagram p-norm.
    pub p_exponent: f64,
}

impl Default for ConstraintLimits {
    fn default() -> Self {
        Self {
            kappa_max: 0.25,
            v_max: 45.0,
            ax_eng: 6.0,
            ax_max: 12.0,
            ay_max: 12.0,
            p_exponent: 2.0,
        }
    }
}

impl ConstraintLimits {
    pub fn validate(&self) -> Result<(), PlannerError> {
        // a zero speed cap is allowed: it makes every candidate infeasible
        let all = [self.kappa_max, self.ax_eng, self.ax_max, self.ay_max];
        if all.iter().any(|v| !(*v > 0.0)) || !(self.v_max >= 0.0) || !(self.p_exponent >= 1.0) {
            return Err(PlannerError::InvalidConfig(
                "limits must be positive (v_max non-negative) with p_exponent >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Copy with every acceleration limit multiplied by `scale`.
    pub fn with_acceleration_scale(&self, scale: f64) -> Self {
        Self {
            ax_eng: self.ax_eng * scale,
            ax_max: self.ax_max * scale,
            ay_max: self.ay_max * scale,
            ..*self
        }
    }

    /// Tire utilization `(|a_x|/a_x,max)^p + (|a_y|/a_y,max)^p`.
    pub fn gg_utilization(&self, a_long: f64, a_lat: f64) -> f64 {
        let (x, y) = (a_long.abs() / self.ax_max, a_lat.abs() / self.ay_max);
        if self.p_exponent == 2.0 {
            x * x + y * y
        } else {
            x.powf(self.p_exponent) + y.powf(self.p_exponent)
        }
    }
}

/// Weights of the five cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub w_rl: f64,
    pub w_v: f64,
    pub w_a: f64,
    pub w_pr: f64,
    pub w_c: f64,
}

impl WeightSet {
    pub const NOMINAL_RACING: WeightSet = WeightSet {
        w_rl: 50.0,
        w_v: 10.0,
        w_a: 500.0,
        w_pr: 1e5,
        w_c: 1e8,
    };
    pub const AGGRESSIVE: WeightSet = WeightSet {
        w_rl: 1.0,
        w_v: 10.0,
        w_a: 200.0,
        w_pr: 1e4,
        w_c: 1.0,
    };
    pub const CLOSE_DRIVING: WeightSet = WeightSet {
        w_rl: 1.0,
        w_v: 1.0,
        w_a: 1.0,
        w_pr: 1.0,
        w_c: 100.0,
    };

    pub fn as_array(&self) -> [f64; 5] {
        [self.w_rl, self.w_v, self.w_a, self.w_pr, self.w_c]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w_rl: self.w_rl * c,
            w_v: self.w_v * c,
            w_a: self.w_a * c,
            w_pr: self.w_pr * c,
            w_c: self.w_c * c,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let w = self.as_array();
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || w.iter().all(|v| *v == 0.0) {
            return Err(PlannerError::InvalidConfig(
                "weights must be finite, non-negative and not all zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub horizon: f64,
    pub replan_dt: f64,
    pub traj_dt: f64,
    pub n_lat_samples: usize,
    pub n_speed_samples: usize,
    /// Absolute lateral sampling window, intersected with the track bounds.
    pub lat_range: Option<[f64; 2]>,
    /// Terminal speed band as fractions of the raceline speed.
    pub speed_range: [f64; 2],
    /// Multiplier on the raceline speed used as the speed target.
    pub target_speed_scale: f64,
    pub limits: ConstraintLimits,
    pub cost: CostParams,
    pub footprint: Footprint,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            replan_dt: 0.35,
            traj_dt: 0.05,
            n_lat_samples: 15,
            n_speed_samples: 8,
            lat_range: None,
            speed_range: [0.4, 1.1],
            target_speed_scale: 1.0,
            limits: ConstraintLimits::default(),
            cost: CostParams::default(),
            footprint: Footprint::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        self.limits.validate()?;
        if !(self.traj_dt > 0.0) || !(self.replan_dt > 0.0) {
            return Err(PlannerError::InvalidConfig("time steps must be positive".into()));
        }
        if self.horizon < self.replan_dt {
            return Err(PlannerError::InvalidConfig(
                "horizon shorter than replan interval".into(),
            ));
        }
        let ratio = self.replan_dt / self.traj_dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(PlannerError::InvalidConfig("traj_dt must divide replan_dt".into()));
        }
        if self.n_lat_samples == 0 || self.n_speed_samples == 0 {
            return Err(PlannerError::InvalidConfig("sample counts must be at least 1".into()));
        }
        if !(self.speed_range[0] <= self.speed_range[1]) {
            return Err(PlannerError::InvalidConfig("speed_range must be ordered".into()));
        }
        Ok(())
    }

    /// Number of trajectory intervals over the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.traj_dt).round() as usize
    }

    pub fn replan_steps(&self) -> usize {
        (self.replan_dt / self.traj_dt).round() as usize
    }
}

/// Planning start state. Lateral derivatives are time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartState {
    pub s: f64,
    pub n: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub n_dot: f64,
    pub n_ddot: f64,
}

impl StartState {
    /// dn/ds.
    pub fn n_prime(&self) -> f64 {
        if self.s_dot.abs() < STANDSTILL_SPEED {
            0.0
        } else {
            self.n_dot / self.s_dot
        }
    }

    /// d²n/ds².
    pub fn n_pprime(&self) -> f64 {
        if self.s_dot.abs() < STANDSTILL_SPEED {
            0.0
        } else {
            (self.n_ddot - self.n_prime() * self.s_ddot) / (self.s_dot * self.s_dot)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: f64,
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub n: f64,
    pub n_dot: f64,
    pub n_ddot: f64,
    /// dn/ds.
    pub n_prime: f64,
    pub v: f64,
    pub a_long: f64,
    pub a_lat: f64,
    pub kappa_path: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    /// Track bounds at `s`.
    pub n_min: f64,
    pub n_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndState {
    pub s_dot_end: f64,
    pub n_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTrajectory {
    pub points: Vec<TrajPoint>,
    pub end_state: EndState,
    pub verdict: Verdict,
    pub cost: Option<CostBreakdown>,
}

impl CandidateTrajectory {
    pub fn dt(&self) -> f64 {
        if self.points.len() < 2 {
            0.0
        } else {
            self.points[1].t - self.points[0].t
        }
    }

    pub fn horizon(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t)
    }

    /// Appends the trajectory rows `t,s,n,v,a_long,a_lat,x,y,feasible,cost_total`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "t,s,n,v,a_long,a_lat,x,y,feasible,cost_total")?;
        }
        let feasible = self.verdict.is_feasible();
        let cost = self.cost.map_or(f64::NAN, |c| c.total);
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.t, p.s, p.n, p.v, p.a_long, p.a_lat, p.x, p.y, feasible, cost
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanDiagnostics {
    pub candidates: usize,
    pub feasible: usize,
    pub selected_index: usize,
    /// Rejections per constraint, indexed like [`Constraint::ALL`].
    pub rejections: [usize; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub best: CandidateTrajectory,
    pub diagnostics: PlanDiagnostics,
}

/// Terminal-state grid for a start state: lateral targets × speed targets,
/// in candidate-index order (lateral-major).
pub fn end_state_grid(start: &StartState, track: &TrackDefinition, config: &PlannerConfig) -> Vec<EndState> {
    let probe = track.reference(start.s + start.s_dot.max(0.0) * config.horizon);
    let (mut lo, mut hi) = (probe.n_min, probe.n_max);
    if let Some([a, b]) = config.lat_range {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo > hi {
        return Vec::new();
    }
    let lateral: Vec<f64> = if config.n_lat_samples == 1 {
        vec![probe.n_raceline.clamp(lo, hi)]
    } else {
        let k = (config.n_lat_samples - 1) as f64;
        (0..config.n_lat_samples)
            .map(|i| lo + (hi - lo) * i as f64 / k)
            .collect()
    };
    let v_ref = probe.v_raceline * config.target_speed_scale;
    let [f_lo, f_hi] = config.speed_range;
    let speeds: Vec<f64> = if config.n_speed_samples == 1 {
        vec![(v_ref * f_lo).clamp(0.0, config.limits.v_max)]
    } else {
        let k = (config.n_speed_samples - 1) as f64;
        (0..config.n_speed_samples)
            .map(|j| (v_ref * (f_lo + (f_hi - f_lo) * j as f64 / k)).clamp(0.0, config.limits.v_max))
            .collect()
    };
    lateral
        .iter()
        .flat_map(|&n_end| speeds.iter().map(move |&s_dot_end| EndState { s_dot_end, n_end }))
        .collect()
}

/// Generates, assembles and feasibility-checks the whole candidate set.
pub fn generate_candidates(
    start: &StartState,
    track: &TrackDefinition,
    config: &PlannerConfig,
) -> Result<Vec<CandidateTrajectory>, PlannerError> {
    config.validate()?;
    end_state_grid(start, track, config)
        .into_iter()
        .map(|end| {
            let long = gen_longitudinal(start, end.s_dot_end, config.horizon)?;
            let lat = gen_lateral(start, end.n_end, config.horizon)?;
            let mut traj = assemble_trajectory(&long, &lat, track, config);
            traj.end_state = end;
            Ok(traj)
        })
        .collect()
}

/// Index of the cheapest feasible candidate; ties go to the lower collision
/// term, then to the end offset closest to the raceline, then to the lower
/// index. Costs must already be evaluated.
pub fn select_best(candidates: &[CandidateTrajectory], track: &TrackDefinition) -> Option<usize> {
    let key = |c: &CandidateTrajectory| {
        let cost = c.cost.expect("cost evaluated for feasible candidate");
        let end_s = c.points.last().map_or(0.0, |p| p.s);
        let rl_gap = (c.end_state.n_end - track.reference(end_s).n_raceline).abs();
        (cost.total, cost.c_c, rl_gap)
    };
    let mut best: Option<(usize, (f64, f64, f64))> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !c.verdict.is_feasible() {
            continue;
        }
        let k = key(c);
        let better = match &best {
            None => true,
            Some((_, b)) => k.0 < b.0 || (k.0 == b.0 && (k.1 < b.1 || (k.1 == b.1 && k.2 < b.2))),
        };
        if better {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

/// One full planning cycle.
pub fn plan(
    start: &StartState,
    track: &TrackDefinition,
    weights: &WeightSet,
    opponent: Option<&OpponentPrediction>,
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlannerError> {
    weights.validate()?;
    let mut candidates = generate_candidates(start, track, config)?;
    let mut diagnostics = PlanDiagnostics {
        candidates: candidates.len(),
        ..Default::default()
    };
    let mut first_rejection = None;
    for c in candidates.iter_mut() {
        match c.verdict {
            Verdict::Feasible => {
                diagnostics.feasible += 1;
                c.cost = Some(evaluate_cost(c, weights, track, opponent, config));
            }
            Verdict::Infeasible { constraint, .. } => {
                diagnostics.rejections[constraint.index()] += 1;
                first_rejection.get_or_insert(constraint);
            }
        }
    }
    let Some(idx) = select_best(&candidates, track) else {
        return Err(PlannerError::NoFeasibleTrajectory {
            candidates: candidates.len(),
            first_rejection,
        });
    };
    diagnostics.selected_index = idx;
    Ok(PlanOutcome {
        best: candidates.swap_remove(idx),
        diagnostics,
    })
}
