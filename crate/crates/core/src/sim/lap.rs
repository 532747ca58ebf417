//! Single-vehicle flying laps.

use serde::{Deserialize, Serialize};

use super::{braking_fallback, Outcome, SimConfig, SimError, VehicleState};
use crate::planner::{plan, Mode, PlannerError};
use crate::track::TrackDefinition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapResult {
    pub mode: Mode,
    /// `Success` once the start line is crossed again.
    pub outcome: Outcome,
    /// Interpolated crossing time; `None` unless the lap completed.
    pub lap_time: Option<f64>,
    pub steps: usize,
    pub trace: Vec<LapPoint>,
}

/// Driven state after each step; `cost_total` is the cost of the trajectory
/// that led there (NaN at the start and after a fallback).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapPoint {
    pub t: f64,
    pub s: f64,
    pub n: f64,
    pub v: f64,
    pub a_long: f64,
    pub a_lat: f64,
    pub x: f64,
    pub y: f64,
    pub feasible: bool,
    pub cost_total: f64,
}

impl LapResult {
    /// Rows `t,s,n,v,a_long,a_lat,x,y,feasible,cost_total`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,s,n,v,a_long,a_lat,x,y,feasible,cost_total")?;
        for p in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.t, p.s, p.n, p.v, p.a_long, p.a_lat, p.x, p.y, p.feasible, p.cost_total
            )?;
        }
        Ok(())
    }
}

/// Drives one lap alone from `start_s` at raceline speed.
pub fn run_lap(
    track: &TrackDefinition,
    config: &SimConfig,
    mode: Mode,
    start_s: f64,
    max_steps: usize,
) -> Result<LapResult, SimError> {
    if !track.is_closed() {
        return Err(SimError::InvalidScenario("lap timing needs a closed track".into()));
    }
    let planner = config.planner;
    planner.validate()?;
    let weights = config.weights.get(mode);
    let finish = start_s + track.lap_length();
    let v0 = (planner.target_speed_scale * track.reference(start_s).v_raceline).min(planner.limits.v_max);
    let mut car = VehicleState::on_raceline(track, start_s, v0, planner.footprint);
    let dt = planner.replan_dt;
    let mut trace = vec![snapshot(&car, 0.0, true, f64::NAN)];
    let mut steps = 0;
    let result = |outcome, lap_time, steps, trace| {
        Ok(LapResult {
            mode,
            outcome,
            lap_time,
            steps,
            trace,
        })
    };
    while steps < max_steps {
        let traj = match plan(&car.start, track, weights, None, &planner) {
            Ok(out) => out.best,
            Err(PlannerError::NoFeasibleTrajectory { .. }) => {
                let t = braking_fallback(track, &car.start, planner.limits.ax_max, &planner);
                car.advance(track, t, dt)?;
                trace.push(snapshot(&car, (steps + 1) as f64 * dt, false, f64::NAN));
                return result(Outcome::NoFeasible, None, steps + 1, trace);
            }
            Err(e) => return Err(e.into()),
        };
        let s_before = car.s;
        let cost = traj.cost.map_or(f64::NAN, |c| c.total);
        car.advance(track, traj, dt)?;
        steps += 1;
        trace.push(snapshot(&car, steps as f64 * dt, true, cost));
        let r = track.reference(car.s);
        if !(r.n_min <= car.n && car.n <= r.n_max) {
            return result(Outcome::OffTrack, None, steps, trace);
        }
        if car.s >= finish {
            let frac = (finish - s_before) / (car.s - s_before);
            let t = (steps as f64 - 1.0 + frac) * dt;
            return result(Outcome::Success, Some(t), steps, trace);
        }
    }
    result(Outcome::Timeout, None, steps, trace)
}

fn snapshot(v: &VehicleState, t: f64, feasible: bool, cost_total: f64) -> LapPoint {
    LapPoint {
        t,
        s: v.s,
        n: v.n,
        v: v.v,
        a_long: v.a_long,
        a_lat: v.a_lat,
        x: v.x,
        y: v.y,
        feasible,
        cost_total,
    }
}
