//! A single planning cycle behind a slower opponent, under each weight set.
//! Shows how the mode changes which candidate wins.
//!
//! cargo run --example plan_once

use racecraft::planner::{plan, predict_opponent, Mode, ObservedVehicle, PlannerConfig, WeightLibrary};
use racecraft::sim::VehicleState;
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
    let cfg = PlannerConfig::default();
    let ego = VehicleState::on_raceline(&track, 20.0, 32.0, cfg.footprint);
    let start = ego.start;
    let opp = ObservedVehicle {
        s: 38.0,
        n: track.reference(38.0).n_raceline,
        s_dot: 26.0,
        mu: 0.0,
        footprint: cfg.footprint,
    };
    let pred = predict_opponent(&opp, &track, &cfg);
    let lib = WeightLibrary::default();
    for mode in Mode::ALL {
        let out = plan(&start, &track, lib.get(mode), Some(&pred), &cfg)?;
        let end = out.best.points.last().unwrap();
        let c = out.best.cost.unwrap();
        println!(
            "{mode}: {}/{} feasible, end n {:+.2} m, end v {:.1} m/s, costs rl {:.1} v {:.1} a {:.1} pr {:.2} c {:.2}",
            out.diagnostics.feasible, out.diagnostics.candidates, end.n, end.v, c.c_rl, c.c_v, c.c_a, c.c_pr, c.c_c
        );
    }
    Ok(())
}
