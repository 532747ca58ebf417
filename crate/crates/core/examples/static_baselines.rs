//! Static single-mode policies against the reactive opponent.
//!
//! cargo run --release --example static_baselines -- 20

use std::sync::Arc;

use racecraft::agent::evaluate_static;
use racecraft::bench::RunConfig;
use racecraft::planner::Mode;
use racecraft::sim::format_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(20);
    let mut cfg = RunConfig::default();
    cfg.scenarios.count = count;
    let track = Arc::new(cfg.track.build()?);
    let scenarios = cfg.scenarios.scenarios(track.lap_length(), 0.0);
    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let r = evaluate_static(mode, track.clone(), &cfg.sim_config(), &scenarios)?;
        rows.push((format!("static:{mode}"), r.metrics));
    }
    print!("{}", format_table(&rows));
    Ok(())
}
