//! A short race training run followed by a held-out evaluation of the
//! greedy policy. Far too short to learn much; it shows the moving parts.
//!
//! cargo run --release --example short_training -- 20000

use std::sync::Arc;

use racecraft::agent::{evaluate, train_race, CURVE_HEADER};
use racecraft::bench::RunConfig;
use racecraft::sim::format_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: u64 = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(20_000);
    let mut cfg = RunConfig::default();
    cfg.train.ppo.total_steps = steps;
    cfg.train.ppo.rollout_len = 128;
    cfg.scenarios.count = 10;
    let track = Arc::new(cfg.track.build()?);
    println!("{CURVE_HEADER}");
    let out = train_race(
        &cfg.train,
        track.clone(),
        cfg.sim_config(),
        cfg.train_distribution(),
        None,
        &mut |_, curve| {
            println!("{}", curve.last().unwrap().csv());
            Ok(())
        },
    )?;
    let scenarios = cfg.scenarios.scenarios(track.lap_length(), cfg.train.ppo.opponent_mix);
    let r = evaluate(&out.model, track, &cfg.sim_config(), &scenarios)?;
    print!("{}", format_table(&[("learned".to_string(), r.metrics)]));
    println!("{}", r.histogram_line());
    Ok(())
}
