//! Start-state identification.

use super::{CandidateTrajectory, PlannerError, StartState};
use crate::track::TrackDefinition;

/// Start state for the next cycle: the committed trajectory evaluated at
/// `replan_dt` (perfect tracking), linearly interpolated between samples.
pub fn identify_start_state(previous: &CandidateTrajectory, replan_dt: f64) -> Result<StartState, PlannerError> {
    let pts = &previous.points;
    let available = previous.horizon();
    if pts.len() < 2 || replan_dt > available + 1e-9 {
        return Err(PlannerError::HorizonExhausted {
            available,
            requested: replan_dt,
        });
    }
    let dt = previous.dt();
    let pos = replan_dt / dt;
    let k = pos.round();
    let (a, b, f) = if (pos - k).abs() < 1e-9 {
        let k = (k as usize).min(pts.len() - 1);
        (k, k, 0.0)
    } else {
        let k = (pos.floor() as usize).min(pts.len() - 2);
        (k, k + 1, pos - k as f64)
    };
    let (p, q) = (&pts[a], &pts[b]);
    let lerp = |u: f64, v: f64| u + f * (v - u);
    Ok(StartState {
        s: lerp(p.s, q.s),
        n: lerp(p.n, q.n),
        s_dot: lerp(p.s_dot, q.s_dot),
        s_ddot: lerp(p.s_ddot, q.s_ddot),
        n_dot: lerp(p.n_dot, q.n_dot),
        n_ddot: lerp(p.n_ddot, q.n_ddot),
    })
}

/// First-cycle start state from a raw vehicle state: speed `v` along
/// heading `mu` relative to the reference, acceleration along the heading.
pub fn start_state_from_vehicle(track: &TrackDefinition, s: f64, n: f64, v: f64, mu: f64, a_long: f64) -> StartState {
    let one_minus = 1.0 - n * track.reference(s).kappa;
    let (sin, cos) = mu.sin_cos();
    StartState {
        s,
        n,
        s_dot: v * cos / one_minus,
        s_ddot: a_long * cos / one_minus,
        n_dot: v * sin,
        n_ddot: a_long * sin,
    }
}
