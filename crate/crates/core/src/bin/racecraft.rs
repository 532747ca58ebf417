use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use racecraft::bench::{
    cmd_lap, cmd_race_on, cmd_report, cmd_timing, cmd_track, cmd_train, BenchError, PolicyChoice, ReportOptions,
    RunConfig,
};
use racecraft::planner::Mode;
use racecraft::track::SynthKind;

#[derive(Parser)]
#[command(name = "racecraft", version, about = "Racing planner bench")]
struct Cli {
    /// Run configuration (TOML). Missing keys take defaults.
    #[arg(long, global = true, env = "RACECRAFT_CONFIG")]
    config: Option<PathBuf>,
    /// Run seed (training, policy init, synthetic track for `track`).
    #[arg(long, global = true, env = "RACECRAFT_SEED")]
    seed: Option<u64>,
    /// Output directory (or CSV file for `track`).
    #[arg(long, global = true, env = "RACECRAFT_OUT")]
    out: Option<PathBuf>,
    /// Config override `dotted.key=value`; repeatable. The env variable takes
    /// a comma-separated list.
    #[arg(long = "set", global = true, env = "RACECRAFT_SET", value_delimiter = ',')]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Oval,
    Chicane,
    RandomLoop,
}

#[derive(Clone, Copy, ValueEnum)]
enum Opponent {
    NonReactive,
    ReactiveNr,
    Mix,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic track CSV.
    Track {
        kind: Kind,
        #[arg(long)]
        straight: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        chicane_radius: Option<f64>,
        #[arg(long)]
        chicane_angle: Option<f64>,
        #[arg(long)]
        mean_radius: Option<f64>,
        #[arg(long)]
        harmonics: Option<usize>,
        #[arg(long)]
        roughness: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Single-vehicle flying lap.
    Lap {
        /// NR, AG, CD or `all`.
        #[arg(long, default_value = "all")]
        mode: String,
    },
    /// Scenario batch against an opponent.
    Race {
        /// `static:<NR|AG|CD>` or a checkpoint path.
        #[arg(long, default_value = "static:NR")]
        policy: String,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum)]
        opponent: Option<Opponent>,
        /// Race on the held-out track instead.
        #[arg(long)]
        unseen: bool,
    },
    /// Train the mode selector.
    Train {
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Total environment steps.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Plots and tables for a race bundle.
    Report {
        bundle: PathBuf,
        /// Episode seeds to plot.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Planner cycle and policy inference wall-clock times.
    Timing {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        cycles: Option<usize>,
    },
}

fn opt_set(overrides: &mut Vec<String>, key: &str, v: Option<impl ToString>) {
    if let Some(v) = v {
        overrides.push(format!("{key}={}", v.to_string()));
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let mut overrides = cli.set.clone();
    opt_set(&mut overrides, "seed", cli.seed);
    if let Some(o) = &cli.out {
        overrides.push(format!("out={:?}", o.display().to_string()));
    }
    match &cli.cmd {
        Cmd::Race { count, opponent, .. } => {
            opt_set(&mut overrides, "scenarios.count", *count);
            if let Some(o) = opponent {
                let name = match o {
                    Opponent::NonReactive => "non_reactive",
                    Opponent::ReactiveNr => "reactive_nr",
                    Opponent::Mix => "mix",
                };
                overrides.push(format!("scenarios.opponent=\"{name}\""));
            }
        }
        Cmd::Train { steps, .. } => opt_set(&mut overrides, "train.ppo.total_steps", *steps),
        Cmd::Timing { cycles, .. } => opt_set(&mut overrides, "timing.n_cycles", *cycles),
        _ => {}
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;

    match cli.cmd {
        Cmd::Track {
            kind,
            straight,
            radius,
            chicane_radius,
            chicane_angle,
            mean_radius,
            harmonics,
            roughness,
            width,
            spacing,
        } => {
            let mut spec = cfg.track.clone();
            spec.path = None;
            spec.seed = cli.seed.unwrap_or(spec.seed);
            let (s0, r0) = match spec.synth {
                SynthKind::Oval { straight, radius } | SynthKind::Chicane { straight, radius, .. } => {
                    (straight, radius)
                }
                _ => (250.0, 60.0),
            };
            spec.synth = match kind {
                Kind::Oval => SynthKind::Oval {
                    straight: straight.unwrap_or(s0),
                    radius: radius.unwrap_or(r0),
                },
                Kind::Chicane => SynthKind::Chicane {
                    straight: straight.unwrap_or(s0),
                    radius: radius.unwrap_or(r0),
                    chicane_radius: chicane_radius.unwrap_or(40.0),
                    chicane_angle_deg: chicane_angle.unwrap_or(30.0),
                },
                Kind::RandomLoop => SynthKind::RandomLoop {
                    mean_radius: mean_radius.unwrap_or(150.0),
                    harmonics: harmonics.unwrap_or(4),
                    roughness: roughness.unwrap_or(0.25),
                },
            };
            spec.params.width = width.unwrap_or(spec.params.width);
            spec.params.spacing = spacing.unwrap_or(spec.params.spacing);
            let out = match &cli.out {
                Some(p) if p.extension().is_some_and(|e| e == "csv") => p.clone(),
                _ => cfg.out.join("track.csv"),
            };
            let track = cmd_track(&spec, &out)?;
            println!(
                "wrote {} ({} samples, lap {:.1} m)",
                out.display(),
                track.samples().len(),
                track.lap_length()
            );
        }
        Cmd::Lap { mode } => {
            let modes = if mode.eq_ignore_ascii_case("all") {
                Mode::ALL.to_vec()
            } else {
                vec![mode
                    .parse()
                    .map_err(|e: racecraft::planner::PlannerError| BenchError::Config(e.to_string()))?]
            };
            let mut failed = false;
            for m in modes {
                let lap = cmd_lap(&cfg, m)?;
                match lap.lap_time {
                    Some(t) => println!("{m}: lap time {t:.3} s ({} steps)", lap.steps),
                    None => {
                        failed = true;
                        println!("{m}: lap failed ({:?} after {} steps)", lap.outcome, lap.steps)
                    }
                }
            }
            if failed {
                return Err(BenchError::Failed("at least one lap did not complete".into()));
            }
        }
        Cmd::Race { policy, unseen, .. } => {
            let choice = PolicyChoice::parse(&policy)?;
            let spec = if unseen { &cfg.unseen_track } else { &cfg.track };
            let s = cmd_race_on(&cfg, spec.build()?, &choice, &cfg.out)?;
            print!("{}", std::fs::read_to_string(cfg.out.join("metrics.txt"))?);
            println!("modes: {}", s.report.histogram_line());
            println!("bundle: {}", cfg.out.display());
        }
        Cmd::Train { resume, .. } => {
            let s = cmd_train(&cfg, resume.as_deref())?;
            println!(
                "trained {} updates, {} steps, final mean reward {:.2}; checkpoint {}",
                s.updates,
                s.steps,
                s.final_mean_reward,
                s.checkpoint.display()
            );
        }
        Cmd::Report { bundle, seeds } => {
            let r = cmd_report(
                &bundle,
                &ReportOptions {
                    seeds,
                    ..Default::default()
                },
            )?;
            print!("{}", std::fs::read_to_string(r.dir.join("metrics.txt"))?);
            println!(
                "plotted seeds {:?}; {} files in {}{}",
                r.plotted,
                r.files.len(),
                r.dir.display(),
                if r.matches_bundle {
                    ""
                } else {
                    " (metrics differ from the bundle's table)"
                }
            );
        }
        Cmd::Timing { checkpoint, .. } => {
            let t = cmd_timing(&cfg, checkpoint.as_deref())?;
            print!("{}", t.text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
