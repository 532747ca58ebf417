//! Jerk-minimal boundary-value polynomials.

use super::{PlannerError, StartState};

/// Smallest horizon the generators accept.
pub const MIN_HORIZON: f64 = 1e-3;

/// Longitudinal velocity-keeping profile `s(t) = Σ a_i t^i`, i = 0..4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic(pub [f64; 5]);

/// Lateral profile `n(t) = Σ b_i t^i`, i = 0..5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic(pub [f64; 6]);

fn check_horizon(horizon: f64) -> Result<(), PlannerError> {
    if !(horizon >= MIN_HORIZON) || !horizon.is_finite() {
        return Err(PlannerError::DegenerateHorizon(horizon));
    }
    Ok(())
}

/// Quartic with start position, speed and acceleration from `start`,
/// terminal speed `s_dot_end` and zero terminal acceleration. The terminal
/// position is left free.
pub fn gen_longitudinal(start: &StartState, s_dot_end: f64, horizon: f64) -> Result<Quartic, PlannerError> {
    check_horizon(horizon)?;
    let t = horizon;
    let a0 = start.s;
    let a1 = start.s_dot;
    let a2 = 0.5 * start.s_ddot;
    // [3T² 4T³; 6T 12T²] [a3 a4]ᵀ = [v_end - a1 - 2 a2 T, -2 a2]ᵀ
    let dv = s_dot_end - a1 - 2.0 * a2 * t;
    let da = -2.0 * a2;
    let a3 = dv / (t * t) - da / (3.0 * t);
    let a4 = da / (4.0 * t * t) - dv / (2.0 * t * t * t);
    Ok(Quartic([a0, a1, a2, a3, a4]))
}

/// Quintic from the start lateral state to `n_end` with zero terminal
/// lateral speed and acceleration, over time.
pub fn gen_lateral(start: &StartState, n_end: f64, horizon: f64) -> Result<Quintic, PlannerError> {
    check_horizon(horizon)?;
    let t = horizon;
    let (t2, t3) = (t * t, t * t * t);
    let b0 = start.n;
    let b1 = start.n_dot;
    let b2 = 0.5 * start.n_ddot;
    let h = n_end - (b0 + b1 * t + b2 * t2);
    let d = -(b1 + 2.0 * b2 * t);
    let e = -2.0 * b2;
    let b3 = (10.0 * h - 4.0 * d * t + 0.5 * e * t2) / t3;
    let b4 = (-15.0 * h + 7.0 * d * t - e * t2) / (t3 * t);
    let b5 = (6.0 * h - 3.0 * d * t + 0.5 * e * t2) / (t3 * t2);
    Ok(Quintic([b0, b1, b2, b3, b4, b5]))
}

/// Value and first two derivatives of `Σ c_i t^i`.
fn eval3(c: &[f64], t: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
    for &ci in c.iter().rev() {
        ddp = ddp * t + 2.0 * dp;
        dp = dp * t + p;
        p = p * t + ci;
    }
    (p, dp, ddp)
}

impl Quartic {
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        eval3(&self.0, t)
    }
}

impl Quintic {
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        eval3(&self.0, t)
    }
}
