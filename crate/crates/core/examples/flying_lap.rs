//! One flying lap per cost-weight mode on the default oval.
//!
//! cargo run --example flying_lap

use racecraft::planner::Mode;
use racecraft::sim::{run_lap, SimConfig};
use racecraft::track::{synth_track, SynthKind, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let track = synth_track(
        &SynthKind::Oval {
            straight: 250.0,
            radius: 60.0,
        },
        &SynthParams::default(),
        0,
    )?;
    let cfg = SimConfig::default();
    for mode in Mode::ALL {
        let lap = run_lap(&track, &cfg, mode, 0.0, 2000)?;
        let v_max = lap.trace.iter().map(|p| p.v).fold(0.0, f64::max);
        let n_abs = lap.trace.iter().map(|p| p.n.abs()).fold(0.0, f64::max);
        match lap.lap_time {
            Some(t) => println!("{mode}: {t:.3} s, top speed {v_max:.1} m/s, max |n| {n_abs:.2} m"),
            None => println!("{mode}: {:?} after {} steps", lap.outcome, lap.steps),
        }
    }
    Ok(())
}
