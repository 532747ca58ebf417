//! Aggregate metrics over a batch of episodes.

use serde::{Deserialize, Serialize};

use super::{EpisodeResult, Outcome, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub episodes: usize,
    pub collision_pct: f64,
    /// Mean over every recorded overtake; NaN when there was none.
    pub mean_overtake_time_s: f64,
    pub overtakes_per_lap: f64,
    pub success_pct: f64,
    pub failure_pct: f64,
}

pub fn compute_metrics(results: &[EpisodeResult]) -> Result<MetricsTable, SimError> {
    if results.is_empty() {
        return Err(SimError::EmptyInput);
    }
    let episodes = results.len();
    let pct = |pred: &dyn Fn(&EpisodeResult) -> bool| {
        results.iter().filter(|r| pred(r)).count() as f64 / episodes as f64 * 100.0
    };
    let times: Vec<f64> = results.iter().flat_map(|r| r.overtake_times.iter().copied()).collect();
    let mean_overtake_time_s = if times.is_empty() {
        f64::NAN
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    let overtakes: usize = results.iter().map(|r| r.overtakes_completed).sum();
    let laps: f64 = results.iter().map(|r| r.laps).sum();
    Ok(MetricsTable {
        episodes,
        collision_pct: pct(&|r| r.outcome == Outcome::Collision),
        mean_overtake_time_s,
        overtakes_per_lap: if laps > 0.0 { overtakes as f64 / laps } else { 0.0 },
        success_pct: pct(&|r| r.outcome == Outcome::Success),
        failure_pct: pct(&|r| r.outcome.is_failure()),
    })
}

impl MetricsTable {
    pub const CSV_HEADER: &'static str =
        "label,episodes,collision_pct,mean_overtake_time_s,overtakes_per_lap,success_pct,failure_pct";

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.episodes,
            self.collision_pct,
            self.mean_overtake_time_s,
            self.overtakes_per_lap,
            self.success_pct,
            self.failure_pct
        )
    }
}

/// Aligned plain-text rendering of labelled metric rows.
pub fn format_table(rows: &[(String, MetricsTable)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>10}  {:>14}  {:>13}  {:>9}\n",
        "config", "episodes", "collision%", "overtake_time_s", "overtakes/lap", "success%"
    );
    for (label, m) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>10.2}  {:>14.2}  {:>13.3}  {:>9.2}\n",
            label, m.episodes, m.collision_pct, m.mean_overtake_time_s, m.overtakes_per_lap, m.success_pct
        ));
    }
    out
}
