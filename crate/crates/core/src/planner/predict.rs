//! Constant-speed opponent prediction.

use serde::{Deserialize, Serialize};

use super::{PlannerConfig, STANDSTILL_SPEED};
use crate::geometry::Footprint;
use crate::track::TrackDefinition;

/// What the planner observes about another vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedVehicle {
    pub s: f64,
    pub n: f64,
    pub s_dot: f64,
    pub mu: f64,
    pub footprint: Footprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedPose {
    pub t: f64,
    pub s: f64,
    pub n: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpponentPrediction {
    pub poses: Vec<PredictedPose>,
    pub footprint: Footprint,
}

/// Predicts the vehicle at constant `s_dot` on the candidate time grid,
/// with its lateral offset from the raceline decaying exponentially in
/// travelled distance.
pub fn predict_opponent(
    vehicle: &ObservedVehicle,
    track: &TrackDefinition,
    config: &PlannerConfig,
) -> OpponentPrediction {
    let decay = config.cost.prediction_decay.max(1e-6);
    let s_dot = vehicle.s_dot.max(0.0);
    let offset0 = vehicle.n - track.reference(vehicle.s).n_raceline;
    let poses = (0..=config.steps())
        .map(|k| {
            let t = k as f64 * config.traj_dt;
            let s = vehicle.s + s_dot * t;
            let r = track.reference(s);
            let fade = (-(s - vehicle.s) / decay).exp();
            let n = r.n_raceline + offset0 * fade;
            let mu = if s_dot >= STANDSTILL_SPEED {
                let dn_ds = track.raceline_slope(s) - offset0 * fade / decay;
                (dn_ds / (1.0 - n * r.kappa)).atan()
            } else {
                vehicle.mu
            };
            let (sin, cos) = r.psi.sin_cos();
            PredictedPose {
                t,
                s,
                n,
                x: r.x - n * sin,
                y: r.y + n * cos,
                psi: r.psi + mu,
            }
        })
        .collect();
    OpponentPrediction {
        poses,
        footprint: vehicle.footprint,
    }
}
