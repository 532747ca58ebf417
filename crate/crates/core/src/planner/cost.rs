//! Weighted trajectory cost.

use serde::{Deserialize, Serialize};

use super::{CandidateTrajectory, OpponentPrediction, PlannerConfig, WeightSet};
use crate::track::TrackDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    /// gg utilization above which the acceleration term activates.
    pub u_thresh: f64,
    /// Center distance below which the proximity term activates.
    pub d_pr: f64,
    /// Margin added on every side of both footprints for the collision term.
    pub inflation: f64,
    /// Distance over which a predicted opponent's lateral offset relaxes
    /// back to its raceline.
    pub prediction_decay: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            u_thresh: 0.9,
            d_pr: 6.0,
            inflation: 0.5,
            prediction_decay: 50.0,
        }
    }
}

/// Time-integrated cost terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_rl: f64,
    pub c_v: f64,
    pub c_a: f64,
    pub c_pr: f64,
    pub c_c: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn terms(&self) -> [f64; 5] {
        [self.c_rl, self.c_v, self.c_a, self.c_pr, self.c_c]
    }

    /// Same terms, re-weighted.
    pub fn reweighted(&self, w: &WeightSet) -> Self {
        let total = self.terms().iter().zip(w.as_array()).map(|(c, w)| c * w).sum();
        Self { total, ..*self }
    }
}

/// Integrates every term over the trajectory with the trapezoid rule.
pub fn evaluate_cost(
    traj: &CandidateTrajectory,
    weights: &WeightSet,
    track: &TrackDefinition,
    opponent: Option<&OpponentPrediction>,
    config: &PlannerConfig,
) -> CostBreakdown {
    let params = &config.cost;
    let limits = &config.limits;
    let ego_shape = config.footprint.inflated(params.inflation);
    let opp_shape = opponent.map(|o| o.footprint.inflated(params.inflation));

    let integrand = |i: usize| -> [f64; 5] {
        let p = &traj.points[i];
        let r = track.reference(p.s);
        let c_rl = (p.n - r.n_raceline).powi(2);
        let c_v = (p.v - config.target_speed_scale * r.v_raceline).powi(2);
        let c_a = (limits.gg_utilization(p.a_long, p.a_lat) - params.u_thresh)
            .max(0.0)
            .powi(2);
        let (mut c_pr, mut c_c) = (0.0, 0.0);
        if let (Some(opp), Some(shape)) = (opponent, opp_shape) {
            if let Some(q) = opp.poses.get(i) {
                let d = (p.x - q.x).hypot(p.y - q.y);
                c_pr = (params.d_pr - d).max(0.0).powi(2);
                let overlap = ego_shape.at(p.x, p.y, p.psi).overlaps(&shape.at(q.x, q.y, q.psi));
                c_c = if overlap { 1.0 } else { 0.0 };
            }
        }
        [c_rl, c_v, c_a, c_pr, c_c]
    };

    let mut acc = [0.0; 5];
    let pts = &traj.points;
    if pts.len() >= 2 {
        let mut prev = integrand(0);
        for i in 1..pts.len() {
            let cur = integrand(i);
            let h = pts[i].t - pts[i - 1].t;
            for k in 0..5 {
                acc[k] += 0.5 * h * (prev[k] + cur[k]);
            }
            prev = cur;
        }
    }
    CostBreakdown {
        c_rl: acc[0],
        c_v: acc[1],
        c_a: acc[2],
        c_pr: acc[3],
        c_c: acc[4],
        total: 0.0,
    }
    .reweighted(weights)
}
