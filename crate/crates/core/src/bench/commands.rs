use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, TrackSpec};
use super::BenchError;
use crate::agent::{
    build_observation, evaluate, evaluate_with, policy_from_checkpoint, train_race, ActorCritic, AgentCheckpoint,
    EvalReport, CURVE_HEADER,
};
use crate::planner::{plan, predict_opponent, Mode};
use crate::sim::{format_table, run_lap, LapResult, MetricsTable, RaceEnv};
use crate::track::{save_track, TrackDefinition};

/// Builds a track from `spec` and writes it as CSV.
pub fn cmd_track(spec: &TrackSpec, out: &Path) -> Result<TrackDefinition, BenchError> {
    let track = spec.build()?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_track(&track, out)?;
    Ok(track)
}

/// Single-vehicle lap in `mode` on the configured track. Writes the trace
/// to `<out>/lap_<mode>.csv`.
pub fn cmd_lap(cfg: &RunConfig, mode: Mode) -> Result<LapResult, BenchError> {
    let track = cfg.track.build()?;
    let max_steps = cfg.scenarios.max_steps.max(1);
    let lap = run_lap(&track, &cfg.sim_config(), mode, 0.0, max_steps)?;
    fs::create_dir_all(&cfg.out)?;
    let mut w = BufWriter::new(fs::File::create(cfg.out.join(format!("lap_{mode}.csv")))?);
    lap.write_csv(&mut w)?;
    w.flush()?;
    Ok(lap)
}

/// Mode selection used by [`cmd_race`].
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyChoice {
    Static(Mode),
    Checkpoint(PathBuf),
}

impl PolicyChoice {
    /// Parses `static:<MODE>` or a checkpoint path.
    pub fn parse(s: &str) -> Result<Self, BenchError> {
        match s.strip_prefix("static:") {
            Some(m) => m
                .parse()
                .map(PolicyChoice::Static)
                .map_err(|_| BenchError::Config(format!("unknown mode `{m}` (expected NR, AG or CD)"))),
            None => Ok(PolicyChoice::Checkpoint(PathBuf::from(s))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolicyChoice::Static(m) => format!("static:{m}"),
            PolicyChoice::Checkpoint(p) => format!("checkpoint:{}", p.display()),
        }
    }
}

/// Contents of `summary.json` in a race bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceSummary {
    pub label: String,
    pub track_lap_length: f64,
    pub report: EvalReport,
    pub seeds: Vec<u64>,
}

fn load_policy(path: &Path) -> Result<ActorCritic, BenchError> {
    let ck = AgentCheckpoint::load(path)?;
    Ok(policy_from_checkpoint(&ck)?)
}

/// Runs a scenario batch on `track` and writes a bundle to `out`:
/// `config.toml`, `track.csv`, `scenarios.json`, `metrics.{csv,txt}`,
/// `summary.json` and one
/// `episodes/seed_<seed>.jsonl` log per episode.
pub fn cmd_race_on(
    cfg: &RunConfig,
    track: TrackDefinition,
    policy: &PolicyChoice,
    out: &Path,
) -> Result<RaceSummary, BenchError> {
    let track = Arc::new(track);
    let sim = cfg.sim_config();
    let scenarios = cfg.scenarios.scenarios(track.lap_length(), cfg.train.ppo.opponent_mix);
    let report = match policy {
        PolicyChoice::Static(m) => {
            let m = *m;
            evaluate_with(track.clone(), &sim, &scenarios, move |_| m)?
        }
        PolicyChoice::Checkpoint(p) => evaluate(&load_policy(p)?, track.clone(), &sim, &scenarios)?,
    };
    let label = policy.label();
    let episodes = out.join("episodes");
    fs::create_dir_all(&episodes)?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    fs::write(out.join("scenarios.json"), serde_json::to_string_pretty(&scenarios)?)?;
    save_track(&track, out.join("track.csv"))?;
    for r in &report.results {
        let f = fs::File::create(episodes.join(format!("seed_{}.jsonl", r.seed)))?;
        let mut w = BufWriter::new(f);
        r.write_jsonl(&mut w)?;
        w.flush()?;
    }
    write_metrics(out, &[(label.clone(), report.metrics)])?;
    let summary = RaceSummary {
        label,
        track_lap_length: track.lap_length(),
        seeds: scenarios.iter().map(|s| s.seed).collect(),
        report,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// [`cmd_race_on`] on the configured track, writing to `cfg.out`.
pub fn cmd_race(cfg: &RunConfig, policy: &PolicyChoice) -> Result<RaceSummary, BenchError> {
    cmd_race_on(cfg, cfg.track.build()?, policy, &cfg.out)
}

pub(crate) fn write_metrics(dir: &Path, rows: &[(String, MetricsTable)]) -> Result<(), BenchError> {
    let mut csv = String::from(MetricsTable::CSV_HEADER);
    csv.push('\n');
    for (label, m) in rows {
        csv.push_str(&m.csv_row(label));
        csv.push('\n');
    }
    fs::write(dir.join("metrics.csv"), csv)?;
    fs::write(dir.join("metrics.txt"), format_table(rows))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub update: usize,
    pub steps: u64,
    pub collision_pct: f64,
    pub mean_overtake_time_s: f64,
    pub success_pct: f64,
    pub histogram: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub updates: usize,
    pub steps: u64,
    pub final_mean_reward: f64,
}

fn read_curve(path: &Path, up_to: usize) -> Result<Vec<String>, BenchError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| {
            l.split(',')
                .next()
                .and_then(|u| u.parse::<usize>().ok())
                .is_some_and(|u| u <= up_to)
        })
        .map(str::to_string)
        .collect())
}

/// Trains on the configured track. Artifacts under `cfg.out`:
/// `checkpoint.json` (latest), `checkpoints/update_<n>.json`, `curve.csv`,
/// `snapshots.csv` and `config.toml`.
pub fn cmd_train(cfg: &RunConfig, resume: Option<&Path>) -> Result<TrainSummary, BenchError> {
    let track = Arc::new(cfg.track.build()?);
    let sim = cfg.sim_config();
    let tc = cfg.train_config();
    let out = &cfg.out;
    let ck_dir = out.join("checkpoints");
    fs::create_dir_all(&ck_dir)?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;

    let resume_ck = match resume {
        Some(p) => Some(AgentCheckpoint::load(p)?),
        None => None,
    };
    let start = resume_ck.as_ref().map_or(0, |c| c.meta.updates);
    let prior_curve = read_curve(&out.join("curve.csv"), start)?;
    let mut snapshots = if start > 0 {
        read_curve(&out.join("snapshots.csv"), start)?
    } else {
        Vec::new()
    };

    let dist = cfg.train_distribution();
    let snap_batch = super::config::BatchSpec {
        count: cfg.train_extras.snapshot_episodes,
        first_seed: cfg.scenarios.first_seed + 500_000,
        ..cfg.scenarios
    };
    let snap_scenarios = snap_batch.scenarios(track.lap_length(), tc.ppo.opponent_mix);

    let mut on_checkpoint =
        |ck: &AgentCheckpoint, curve: &[crate::agent::CurveRow]| -> Result<(), crate::agent::AgentError> {
            let io = |e: std::io::Error| crate::agent::AgentError::Neural(e.into());
            ck.save(&ck_dir.join(format!("update_{:05}.json", ck.meta.updates)))?;
            ck.save(&out.join("checkpoint.json"))?;
            let mut text = String::from(CURVE_HEADER);
            text.push('\n');
            for l in &prior_curve {
                text.push_str(l);
                text.push('\n');
            }
            for r in curve {
                text.push_str(&r.csv());
                text.push('\n');
            }
            fs::write(out.join("curve.csv"), text).map_err(io)?;

            if !snap_scenarios.is_empty() {
                let model = policy_from_checkpoint(ck)?;
                let rep = evaluate(&model, track.clone(), &sim, &snap_scenarios)?;
                let row = SnapshotRow {
                    update: ck.meta.updates,
                    steps: ck.meta.steps,
                    collision_pct: rep.metrics.collision_pct,
                    mean_overtake_time_s: rep.metrics.mean_overtake_time_s,
                    success_pct: rep.metrics.success_pct,
                    histogram: rep.action_histogram,
                };
                snapshots.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    row.update,
                    row.steps,
                    row.collision_pct,
                    row.mean_overtake_time_s,
                    row.success_pct,
                    row.histogram[0],
                    row.histogram[1],
                    row.histogram[2]
                ));
                let mut text = String::from(
                    "update,steps,collision_pct,mean_overtake_time_s,success_pct,steps_NR,steps_AG,steps_CD\n",
                );
                for l in &snapshots {
                    text.push_str(l);
                    text.push('\n');
                }
                fs::write(out.join("snapshots.csv"), text).map_err(io)?;
            }
            Ok(())
        };
    let outcome = train_race(&tc, track.clone(), sim, dist, resume_ck, &mut on_checkpoint)?;
    let final_path = out.join("checkpoint.json");
    outcome.checkpoint.save(&final_path)?;
    Ok(TrainSummary {
        checkpoint: final_path,
        updates: outcome.checkpoint.meta.updates,
        steps: outcome.checkpoint.meta.steps,
        final_mean_reward: outcome.curve.last().map_or(f64::NAN, |r| r.mean_reward),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_cycles: usize,
    pub planner_mean_ms: f64,
    pub planner_p50_ms: f64,
    pub planner_p90_ms: f64,
    pub planner_p99_ms: f64,
    pub inference_mean_ms: f64,
    pub inference_min_ms: f64,
    /// Inference mean over planner mean.
    pub overhead_ratio: f64,
}

impl TimingReport {
    pub fn text(&self) -> String {
        format!(
            "cycles            {}\nplanner mean      {:.3} ms\nplanner p50/p90/p99 {:.3} / {:.3} / {:.3} ms\ninference mean    {:.4} ms\ninference min     {:.4} ms\noverhead ratio    {:.2}%\n",
            self.n_cycles,
            self.planner_mean_ms,
            self.planner_p50_ms,
            self.planner_p90_ms,
            self.planner_p99_ms,
            self.inference_mean_ms,
            self.inference_min_ms,
            100.0 * self.overhead_ratio
        )
    }
}

pub const MIN_TIMING_CYCLES: usize = 100;

/// Wall-clock cost of one ego planning cycle and one policy inference,
/// measured on the same states. Uses a freshly initialized policy when no
/// checkpoint is given.
pub fn cmd_timing(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<TimingReport, BenchError> {
    let n = cfg.timing.n_cycles;
    if n < MIN_TIMING_CYCLES {
        return Err(BenchError::Config(format!(
            "timing needs at least {MIN_TIMING_CYCLES} cycles, got {n}"
        )));
    }
    let policy = match checkpoint {
        Some(p) => load_policy(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            ActorCritic::new(&cfg.train.model, cfg.train.observation, &mut rng)?
        }
    };
    let track = Arc::new(cfg.track.build()?);
    let sim = cfg.sim_config();
    let batch = super::config::BatchSpec {
        count: 64,
        ..cfg.scenarios
    };
    let scenarios = batch.scenarios(track.lap_length(), cfg.train.ppo.opponent_mix);
    let mut next = 0;
    let mut env = RaceEnv::new(track.clone(), sim, scenarios[0])?;
    let mut plan_ms = Vec::with_capacity(n);
    let mut infer_ms = Vec::with_capacity(n);
    for cycle in 0..cfg.timing.warmup + n {
        if env.is_done() {
            next = (next + 1) % scenarios.len();
            env.reset(scenarios[next])?;
        }
        let t0 = Instant::now();
        let pred = predict_opponent(&env.opponent().observed(), &track, &sim.planner);
        let planned = plan(
            &env.ego().start,
            &track,
            sim.weights.get(Mode::NominalRacing),
            Some(&pred),
            &sim.planner,
        );
        let dt_plan = t0.elapsed().as_secs_f64() * 1e3;
        std::hint::black_box(&planned);
        let t1 = Instant::now();
        let mode = policy.act_greedy(&build_observation(&env, &policy.obs))?;
        let dt_inf = t1.elapsed().as_secs_f64() * 1e3;
        if cycle >= cfg.timing.warmup {
            plan_ms.push(dt_plan);
            infer_ms.push(dt_inf);
        }
        env.step(mode)?;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut sorted = plan_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let pct = |q: f64| sorted[((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    let planner_mean_ms = mean(&plan_ms);
    let inference_mean_ms = mean(&infer_ms);
    let report = TimingReport {
        n_cycles: n,
        planner_mean_ms,
        planner_p50_ms: pct(0.5),
        planner_p90_ms: pct(0.9),
        planner_p99_ms: pct(0.99),
        inference_mean_ms,
        inference_min_ms: infer_ms.iter().copied().fold(f64::INFINITY, f64::min),
        overhead_ratio: inference_mean_ms / planner_mean_ms,
    };
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("timing.txt"), report.text())?;
    fs::write(cfg.out.join("timing.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
