//! Scripted motion profiles: raceline following and emergency braking.

use crate::planner::{assemble_profile, CandidateTrajectory, KinematicSample, PlannerConfig, StartState};
use crate::track::TrackDefinition;

/// Ratio of path speed to `ds/dt` when riding the raceline at `s`.
fn raceline_stretch(track: &TrackDefinition, s: f64) -> (f64, f64) {
    let r = track.reference(s);
    let slope = track.raceline_slope(s);
    ((1.0 - r.n_raceline * r.kappa).hypot(slope), slope)
}

/// Follows the raceline exactly, tracking `speed_scale · v_raceline` with
/// acceleration limited by `config.limits` (engine cap when speeding up,
/// `ax_max` when braking).
pub fn raceline_follow(
    track: &TrackDefinition,
    s0: f64,
    v0: f64,
    speed_scale: f64,
    config: &PlannerConfig,
) -> CandidateTrajectory {
    let dt = config.traj_dt;
    let steps = config.steps();
    let (mut s, mut v) = (s0, v0.max(0.0));
    let mut raw = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let (stretch, slope) = raceline_stretch(track, s);
        let s_dot = v / stretch;
        raw.push((k as f64 * dt, s, s_dot, track.reference(s).n_raceline, slope * s_dot));
        let target = speed_scale * track.reference(s).v_raceline;
        let accel = ((target - v) / dt).clamp(-config.limits.ax_max, config.limits.ax_eng);
        let v_next = (v + accel * dt).max(0.0);
        // midpoint speed, converted with the stretch halfway along
        let s_mid = s + 0.5 * dt * s_dot;
        s += dt * 0.5 * (v + v_next) / raceline_stretch(track, s_mid).0;
        v = v_next;
    }
    let samples = finish_samples(&raw, dt);
    assemble_profile(&samples, track, &config.limits)
}

/// Brakes at `decel` along the current lateral offset until standstill.
pub fn braking_fallback(
    track: &TrackDefinition,
    start: &StartState,
    decel: f64,
    config: &PlannerConfig,
) -> CandidateTrajectory {
    let dt = config.traj_dt;
    let v0 = start.s_dot.max(0.0);
    let t_stop = v0 / decel;
    let samples: Vec<KinematicSample> = (0..=config.steps())
        .map(|k| {
            let t = k as f64 * dt;
            let tau = t.min(t_stop);
            KinematicSample {
                t,
                s: start.s + v0 * tau - 0.5 * decel * tau * tau,
                s_dot: v0 - decel * tau,
                s_ddot: if t < t_stop { -decel } else { 0.0 },
                n: start.n,
                n_dot: 0.0,
                n_ddot: 0.0,
            }
        })
        .collect();
    assemble_profile(&samples, track, &config.limits)
}

/// Fills in second derivatives by finite differences.
fn finish_samples(raw: &[(f64, f64, f64, f64, f64)], dt: f64) -> Vec<KinematicSample> {
    let m = raw.len();
    let diff = |i: usize, f: &dyn Fn(usize) -> f64| -> f64 {
        if m < 2 {
            return 0.0;
        }
        let (a, b) = match i {
            0 => (0, 1),
            i if i == m - 1 => (m - 2, m - 1),
            i => (i - 1, i + 1),
        };
        (f(b) - f(a)) / ((b - a) as f64 * dt)
    };
    (0..m)
        .map(|i| {
            let (t, s, s_dot, n, n_dot) = raw[i];
            KinematicSample {
                t,
                s,
                s_dot,
                s_ddot: diff(i, &|j| raw[j].2),
                n,
                n_dot,
                n_ddot: diff(i, &|j| raw[j].4),
            }
        })
        .collect()
}
