//! Plots and tables rebuilt from a race bundle's episode logs.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use super::commands::write_metrics;
use super::svg::{render, Chart, Series, PALETTE};
use super::BenchError;
use crate::planner::Mode;
use crate::sim::{compute_metrics, EpisodeResult, MetricsTable, ScenarioConfig, StepRecord};
use crate::track::{load_track, TrackDefinition};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Seeds to plot; empty picks automatically.
    pub seeds: Vec<u64>,
    /// Episodes picked when `seeds` is empty, overtaking ones first.
    pub max_auto: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            max_auto: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub dir: PathBuf,
    pub label: String,
    /// Metrics recomputed from the logs.
    pub metrics: MetricsTable,
    /// Whether they agree with the bundle's own `metrics.csv`.
    pub matches_bundle: bool,
    pub plotted: Vec<u64>,
    pub files: Vec<PathBuf>,
}

pub const PANELS: [&str; 4] = ["lateral", "gap", "speed", "mode"];

/// One episode log with its scenario.
#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub scenario: ScenarioConfig,
    pub records: Vec<StepRecord>,
}

impl EpisodeLog {
    /// Rebuilds the episode summary from the step log alone.
    pub fn to_result(&self, lap_length: f64) -> Result<EpisodeResult, BenchError> {
        let seed = self.scenario.seed;
        let last = self
            .records
            .last()
            .ok_or_else(|| BenchError::Config(format!("episode {seed} has an empty log")))?;
        let outcome = last
            .outcome
            .ok_or_else(|| BenchError::Config(format!("episode {seed} log ends before termination")))?;
        let dt = self.records[0].t;
        let mut spawn_step = 0;
        let mut done_overtakes = 0;
        let mut overtake_times = Vec::new();
        let mut mode_counts = [0; 3];
        for (i, r) in self.records.iter().enumerate() {
            let step = i + 1;
            mode_counts[r.action.index()] += 1;
            if r.overtakes > done_overtakes {
                overtake_times.push((step - spawn_step) as f64 * dt);
                done_overtakes = r.overtakes;
            }
            if r.respawned {
                spawn_step = step;
            }
        }
        Ok(EpisodeResult {
            seed,
            outcome,
            steps: self.records.len(),
            overtakes_completed: overtake_times.len(),
            overtake_times,
            laps: (last.ego.s - self.scenario.ego_start_s) / lap_length,
            reward_trace: self.records.iter().map(|r| r.reward).collect(),
            mode_counts,
            opponent_fallbacks: 0,
            records: self.records.clone(),
        })
    }
}

fn read_log(path: &Path) -> Result<Vec<StepRecord>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| BenchError::Config(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Loads every episode log of a bundle, sorted by seed.
pub fn load_episodes(dir: &Path) -> Result<Vec<EpisodeLog>, BenchError> {
    let missing = || BenchError::MissingLogs(dir.to_path_buf());
    let scen_path = dir.join("scenarios.json");
    if !scen_path.exists() || !dir.join("episodes").is_dir() {
        return Err(missing());
    }
    let scenarios: Vec<ScenarioConfig> = serde_json::from_str(&fs::read_to_string(scen_path)?)?;
    let mut logs = Vec::new();
    for sc in scenarios {
        let p = dir.join("episodes").join(format!("seed_{}.jsonl", sc.seed));
        if !p.exists() {
            return Err(missing());
        }
        logs.push(EpisodeLog {
            scenario: sc,
            records: read_log(&p)?,
        });
    }
    if logs.is_empty() {
        return Err(missing());
    }
    logs.sort_by_key(|l| l.scenario.seed);
    Ok(logs)
}

fn bundle_label(dir: &Path) -> String {
    fs::read_to_string(dir.join("summary.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get("label").and_then(|l| l.as_str()).map(str::to_string))
        .unwrap_or_else(|| "bundle".into())
}

fn bundle_metrics_row(dir: &Path) -> Option<String> {
    fs::read_to_string(dir.join("metrics.csv"))
        .ok()
        .and_then(|t| t.lines().nth(1).map(str::to_string))
}

/// `ego.s - opp.s` per step, broken after each respawn.
pub fn gap_series(records: &[StepRecord]) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(records.len() + 4);
    for r in records {
        pts.push((r.ego.s, r.ego.s - r.opp.s));
        if r.respawned {
            pts.push((f64::NAN, f64::NAN));
        }
    }
    pts
}

/// Upward zero crossings of the gap, counted within each opponent's stint.
pub fn gap_zero_crossings(points: &[(f64, f64)]) -> usize {
    points
        .split(|(x, y)| !(x.is_finite() && y.is_finite()))
        .map(|run| run.windows(2).filter(|w| w[0].1 < 0.0 && w[1].1 >= 0.0).count())
        .sum()
}

fn episode_panels(log: &EpisodeLog) -> [Chart<'static>; 4] {
    let rec = &log.records;
    let ego = |f: fn(&StepRecord) -> f64| rec.iter().map(|r| (r.ego.s, f(r))).collect::<Vec<_>>();
    let series = |label: &str, points, k: usize| Series {
        label: label.into(),
        points,
        color: PALETTE[k],
    };
    // opponent samples are plotted against its own s; breaks at respawns
    let opp = |f: fn(&StepRecord) -> f64| {
        let mut pts = Vec::new();
        for r in rec {
            pts.push((r.opp.s, f(r)));
            if r.respawned {
                pts.push((f64::NAN, f64::NAN));
            }
        }
        pts
    };
    let mode_ticks = Mode::ALL.iter().map(|m| (m.index() as f64, m.to_string())).collect();
    [
        Chart {
            title: "lateral position",
            x_label: "s [m]",
            y_label: "n [m]",
            series: vec![
                series("ego", ego(|r| r.ego.n), 0),
                series("opponent", opp(|r| r.opp.n), 1),
            ],
            y_ticks: None,
            equal_aspect: false,
        },
        Chart {
            title: "longitudinal gap",
            x_label: "s [m]",
            y_label: "ds [m]",
            series: vec![
                series("ego - opp", gap_series(rec), 0),
                series("zero", vec![(rec[0].ego.s, 0.0), (rec[rec.len() - 1].ego.s, 0.0)], 3),
            ],
            y_ticks: None,
            equal_aspect: false,
        },
        Chart {
            title: "velocity",
            x_label: "s [m]",
            y_label: "v [m/s]",
            series: vec![
                series("ego", ego(|r| r.ego.v), 0),
                series("opponent", opp(|r| r.opp.v), 1),
            ],
            y_ticks: None,
            equal_aspect: false,
        },
        Chart {
            title: "selected mode",
            x_label: "s [m]",
            y_label: "mode",
            series: vec![series("ego", ego(|r| r.action.index() as f64), 2)],
            y_ticks: Some(mode_ticks),
            equal_aspect: false,
        },
    ]
}

fn path_overlay(track: &TrackDefinition, logs: &[&EpisodeLog]) -> Result<String, BenchError> {
    let mut series = Vec::new();
    let edge = |pick: fn(&crate::track::ReferenceSample) -> f64| -> Result<Vec<(f64, f64)>, BenchError> {
        let mut pts = Vec::new();
        for smp in track.samples() {
            let p = track.frenet_to_cartesian(smp.s, pick(smp))?;
            pts.push((p.x, p.y));
        }
        if track.is_closed() {
            pts.push(pts[0]);
        }
        Ok(pts)
    };
    series.push(Series {
        label: "bounds".into(),
        points: edge(|s| s.n_min)?,
        color: PALETTE[3],
    });
    series.push(Series {
        label: String::new(),
        points: edge(|s| s.n_max)?,
        color: PALETTE[3],
    });
    for (k, log) in logs.iter().enumerate() {
        let mut pts = Vec::new();
        for r in &log.records {
            let p = track.frenet_to_cartesian(r.ego.s, r.ego.n)?;
            pts.push((p.x, p.y));
        }
        series.push(Series {
            label: format!("seed {}", log.scenario.seed),
            points: pts,
            color: PALETTE[k % 3],
        });
    }
    Ok(render(&Chart {
        title: "driven paths",
        x_label: "x [m]",
        y_label: "y [m]",
        series,
        y_ticks: None,
        equal_aspect: true,
    }))
}

/// Writes `<bundle>/report/`: `paths.svg`, four panels per selected episode
/// (`seed_<seed>_<panel>.svg`) and metrics recomputed from the logs as
/// `metrics.csv` and `metrics.txt`.
pub fn cmd_report(bundle: &Path, opts: &ReportOptions) -> Result<ReportOutput, BenchError> {
    let logs = load_episodes(bundle)?;
    let track = load_track(bundle.join("track.csv"))?;
    let results = logs
        .iter()
        .map(|l| l.to_result(track.lap_length()))
        .collect::<Result<Vec<_>, _>>()?;
    let metrics = compute_metrics(&results)?;
    let label = bundle_label(bundle);
    let matches_bundle = bundle_metrics_row(bundle).is_some_and(|row| row == metrics.csv_row(&label));

    let selected: Vec<&EpisodeLog> = if opts.seeds.is_empty() {
        let (mut pick, rest): (Vec<&EpisodeLog>, Vec<&EpisodeLog>) = logs
            .iter()
            .partition(|l| l.records.last().is_some_and(|r| r.overtakes > 0));
        pick.extend(rest);
        pick.truncate(opts.max_auto);
        pick.sort_by_key(|l| l.scenario.seed);
        pick
    } else {
        opts.seeds
            .iter()
            .map(|s| {
                logs.iter()
                    .find(|l| l.scenario.seed == *s)
                    .ok_or_else(|| BenchError::Config(format!("no episode with seed {s} in the bundle")))
            })
            .collect::<Result<_, _>>()?
    };

    let dir = bundle.join("report");
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut write = |name: String, text: String| -> Result<(), BenchError> {
        let p = dir.join(name);
        fs::write(&p, text)?;
        files.push(p);
        Ok(())
    };
    write("paths.svg".into(), path_overlay(&track, &selected)?)?;
    for log in &selected {
        if log.records.is_empty() {
            continue;
        }
        for (name, chart) in PANELS.iter().zip(episode_panels(log)) {
            write(format!("seed_{}_{name}.svg", log.scenario.seed), render(&chart))?;
        }
    }
    write_metrics(&dir, &[(label.clone(), metrics)])?;
    files.push(dir.join("metrics.csv"));
    files.push(dir.join("metrics.txt"));
    Ok(ReportOutput {
        dir,
        label,
        metrics,
        matches_bundle,
        plotted: selected.iter().map(|l| l.scenario.seed).collect(),
        files,
    })
}
