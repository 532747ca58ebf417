//! Dense and sparse reward terms.

use serde::{Deserialize, Serialize};

use super::Outcome;

/// Region around the opponent, in its Frenet frame, where interaction
/// terms replace the raceline term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InteractionZone {
    pub long_ahead: f64,
    pub long_behind: f64,
    pub lateral_halfwidth: f64,
}

impl Default for InteractionZone {
    fn default() -> Self {
        Self {
            long_ahead: 30.0,
            long_behind: 15.0,
            lateral_halfwidth: 6.0,
        }
    }
}

impl InteractionZone {
    /// Closed membership test on the ego lead `gap = s_ego − s_opp` and
    /// lateral separation.
    pub fn contains(&self, gap: f64, lateral: f64) -> bool {
        -self.long_behind <= gap && gap <= self.long_ahead && lateral.abs() <= self.lateral_halfwidth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSign {
    /// Inside the zone, reward being ahead of the opponent.
    RewardLead,
    /// Literal reading: reward trailing the opponent.
    RewardTrail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub w_p: f64,
    pub w_v: f64,
    pub w_lat: f64,
    pub w_gap: f64,
    pub w_col: f64,
    pub w_sparse: f64,
    /// Sparse outcome magnitude.
    pub sparse: f64,
    /// Lateral separation below which the proximity penalty applies.
    pub d_safe: f64,
    pub gap_sign: GapSign,
    pub zone: InteractionZone,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_p: 1.0,
            w_v: 0.1,
            w_lat: 0.05,
            w_gap: 0.05,
            w_col: 0.5,
            w_sparse: 1.0,
            sparse: 100.0,
            d_safe: 2.5,
            gap_sign: GapSign::RewardLead,
            zone: InteractionZone::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        let w = [
            self.w_p,
            self.w_v,
            self.w_lat,
            self.w_gap,
            self.w_col,
            self.w_sparse,
            self.d_safe,
        ];
        if w.iter().any(|v| !(*v >= 0.0)) || !(self.sparse > 0.0) {
            return Err("reward weights must be non-negative and the sparse magnitude positive".into());
        }
        let z = &self.zone;
        if !(z.long_ahead > 0.0 && z.long_behind > 0.0 && z.lateral_halfwidth > 0.0) {
            return Err("interaction zone dimensions must be positive".into());
        }
        Ok(())
    }
}

/// Ego (and opponent) quantities entering the reward at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardState {
    /// Unwrapped progress.
    pub s: f64,
    pub n: f64,
    pub v: f64,
    pub n_raceline: f64,
    pub v_target: f64,
    /// Opponent `(s, n)`, if one is present.
    pub opponent: Option<(f64, f64)>,
}

/// Unweighted term values of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub progress: f64,
    pub velocity: f64,
    pub lateral: f64,
    pub gap: f64,
    pub collision: f64,
    pub sparse: f64,
}

/// Reward of the transition `prev → cur`.
pub fn compute_reward(
    prev: &RewardState,
    cur: &RewardState,
    zone_active: bool,
    outcome: Option<Outcome>,
    cfg: &RewardConfig,
) -> (f64, RewardBreakdown) {
    let mut b = RewardBreakdown {
        progress: cur.s - prev.s,
        velocity: -(cur.v_target - cur.v).abs(),
        ..Default::default()
    };
    match (zone_active, cur.opponent) {
        (true, Some((s_opp, n_opp))) => {
            let lead = cur.s - s_opp;
            b.gap = match cfg.gap_sign {
                GapSign::RewardLead => lead,
                GapSign::RewardTrail => -lead,
            };
            b.collision = -(cfg.d_safe - (cur.n - n_opp).abs()).max(0.0);
        }
        _ => b.lateral = -(cur.n - cur.n_raceline).powi(2),
    }
    b.sparse = match outcome {
        Some(Outcome::Success) => cfg.sparse,
        Some(o) if o.is_failure() => -cfg.sparse,
        _ => 0.0,
    };
    let total = cfg.w_p * b.progress
        + cfg.w_v * b.velocity
        + cfg.w_lat * b.lateral
        + cfg.w_gap * b.gap
        + cfg.w_col * b.collision
        + cfg.w_sparse * b.sparse;
    (total, b)
}
