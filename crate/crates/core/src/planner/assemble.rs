//! Composition of Frenet profiles into planar kinematics.

use super::{
    check_feasibility, CandidateTrajectory, ConstraintLimits, EndState, PlannerConfig, Quartic, Quintic, TrajPoint,
    Verdict,
};
use crate::track::TrackDefinition;

/// Below this longitudinal speed, derivatives with respect to `s` are not
/// formed and the path curvature falls back to the offset reference curve.
pub const STANDSTILL_SPEED: f64 = 0.1;

/// Time-parameterized Frenet state; lateral derivatives are in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSample {
    pub t: f64,
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub n: f64,
    pub n_dot: f64,
    pub n_ddot: f64,
}

/// Samples both polynomials on `t ∈ {0, traj_dt, …, horizon}` and composes
/// the planar trajectory. The verdict is evaluated against `config.limits`.
pub fn assemble_trajectory(
    long: &Quartic,
    lat: &Quintic,
    track: &TrackDefinition,
    config: &PlannerConfig,
) -> CandidateTrajectory {
    let steps = config.steps();
    let samples: Vec<KinematicSample> = (0..=steps)
        .map(|k| {
            let t = k as f64 * config.traj_dt;
            let (s, s_dot, s_ddot) = long.eval(t);
            let (n, n_dot, n_ddot) = lat.eval(t);
            KinematicSample {
                t,
                s,
                s_dot,
                s_ddot,
                n,
                n_dot,
                n_ddot,
            }
        })
        .collect();
    assemble_profile(&samples, track, &config.limits)
}

/// Composes planar speed, curvature, accelerations and pose from uniformly
/// time-spaced Frenet samples.
///
/// Longitudinal acceleration is the exact time derivative of
/// `v = sqrt((ṡ(1 − nκ))² + ṅ²)`, so a trajectory sampled at `replan_dt`
/// and the next cycle's start point agree to the last bit.
pub fn assemble_profile(
    samples: &[KinematicSample],
    track: &TrackDefinition,
    limits: &ConstraintLimits,
) -> CandidateTrajectory {
    let points: Vec<TrajPoint> = samples
        .iter()
        .map(|k| {
            let r = track.reference(k.s);
            let one_minus = 1.0 - k.n * r.kappa;
            let (v, n_prime, kappa_path, mu);
            if k.s_dot >= STANDSTILL_SPEED && one_minus > 0.0 {
                let n_s = k.n_dot / k.s_dot;
                let n_ss = (k.n_ddot - n_s * k.s_ddot) / (k.s_dot * k.s_dot);
                let tan_mu = n_s / one_minus;
                let cos_mu = 1.0 / (1.0 + tan_mu * tan_mu).sqrt();
                v = k.s_dot * one_minus / cos_mu;
                kappa_path = ((n_ss + (r.dkappa * k.n + r.kappa * n_s) * tan_mu) * cos_mu * cos_mu / one_minus
                    + r.kappa)
                    * cos_mu
                    / one_minus;
                mu = tan_mu.atan();
                n_prime = n_s;
            } else {
                let along = k.s_dot * one_minus;
                v = along.hypot(k.n_dot);
                mu = if v > 0.0 { k.n_dot.atan2(along) } else { 0.0 };
                kappa_path = r.kappa / one_minus;
                n_prime = 0.0;
            }
            let along = k.s_dot * one_minus;
            let one_minus_dot = -(k.n_dot * r.kappa + k.n * r.dkappa * k.s_dot);
            let a_long = if v > 0.0 {
                (along * (k.s_ddot * one_minus + k.s_dot * one_minus_dot) + k.n_dot * k.n_ddot) / v
            } else {
                k.s_ddot * one_minus
            };
            let (sin, cos) = r.psi.sin_cos();
            TrajPoint {
                t: k.t,
                s: k.s,
                s_dot: k.s_dot,
                s_ddot: k.s_ddot,
                n: k.n,
                n_dot: k.n_dot,
                n_ddot: k.n_ddot,
                n_prime,
                v,
                a_long,
                a_lat: v * v * kappa_path,
                kappa_path,
                x: r.x - k.n * sin,
                y: r.y + k.n * cos,
                psi: r.psi + mu,
                n_min: r.n_min,
                n_max: r.n_max,
            }
        })
        .collect();

    let end_state = points.last().map_or(
        EndState {
            s_dot_end: 0.0,
            n_end: 0.0,
        },
        |p| EndState {
            s_dot_end: p.s_dot,
            n_end: p.n,
        },
    );
    let mut traj = CandidateTrajectory {
        points,
        end_state,
        verdict: Verdict::Feasible,
        cost: None,
    };
    traj.verdict = check_feasibility(&traj, limits);
    traj
}
