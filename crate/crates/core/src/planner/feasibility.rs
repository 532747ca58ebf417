//! Pointwise hard-constraint check.

use serde::{Deserialize, Serialize};

use super::{CandidateTrajectory, ConstraintLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Curvature,
    Speed,
    TrackLimits,
    Engine,
    Acceleration,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::Curvature,
        Constraint::Speed,
        Constraint::TrackLimits,
        Constraint::Engine,
        Constraint::Acceleration,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    /// First violated constraint at the first offending point.
    Infeasible {
        constraint: Constraint,
        index: usize,
    },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

/// A trajectory is feasible iff every point satisfies every constraint.
/// Comparisons are written so that NaN counts as a violation.
pub fn check_feasibility(traj: &CandidateTrajectory, limits: &ConstraintLimits) -> Verdict {
    for (index, p) in traj.points.iter().enumerate() {
        let violated = if !(p.kappa_path.abs() <= limits.kappa_max) {
            Some(Constraint::Curvature)
        } else if !(p.v <= limits.v_max) {
            Some(Constraint::Speed)
        } else if !(p.n_min <= p.n && p.n <= p.n_max) {
            Some(Constraint::TrackLimits)
        } else if !(p.a_long <= limits.ax_eng) {
            Some(Constraint::Engine)
        } else if !(limits.gg_utilization(p.a_long, p.a_lat) <= 1.0) {
            Some(Constraint::Acceleration)
        } else {
            None
        };
        if let Some(constraint) = violated {
            return Verdict::Infeasible { constraint, index };
        }
    }
    Verdict::Feasible
}
