//! Arc-length parameterized track model.
//!
//! A [`TrackDefinition`] is an ordered list of [`ReferenceSample`]s along a
//! planar reference line. Every reference quantity is linearly interpolated
//! in `s`; headings are stored unwrapped so interpolation never crosses a
//! `±π` seam.

mod features;
mod frenet;
mod io;
mod synth;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{GeometryConfig, GeometryFeatures, GEOMETRY_CHANNELS};
pub use frenet::{CartesianPose, FrenetPose};
pub use io::{load_track, parse_track, save_track, write_track};
pub use synth::{synth_track, RacelineParams, SynthKind, SynthParams};

/// Largest admissible gap between consecutive samples on curved sections.
pub const MAX_SAMPLE_SPACING: f64 = 5.0;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invariant violated at row {row}: {invariant}")]
    InvariantViolation { invariant: String, row: usize },
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("singular Frenet transform at s={s:.3}, n={n:.3}")]
    SingularTransform { s: f64, n: f64 },
    #[error("point ({x:.2}, {y:.2}) is {distance:.2} m from the reference line")]
    OffTrackProjection { x: f64, y: f64, distance: f64 },
}

impl TrackError {
    fn violation(invariant: &str, row: usize) -> Self {
        TrackError::InvariantViolation {
            invariant: invariant.to_string(),
            row,
        }
    }
}

/// One sample of the reference line.
///
/// `n_min`/`n_max` bound the lateral offset of the vehicle reference point,
/// so they describe the drivable corridor rather than the painted edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub kappa: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub n_raceline: f64,
    pub v_raceline: f64,
}

/// Reference quantities interpolated at an arbitrary `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub kappa: f64,
    /// d(kappa)/ds of the piecewise-linear curvature profile.
    pub dkappa: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub n_raceline: f64,
    pub v_raceline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackDefinition {
    samples: Vec<ReferenceSample>,
    lap_length: f64,
    closed: bool,
    /// Unwrapped heading of the first sample as seen from the end of the lap.
    closing_psi: f64,
}

impl TrackDefinition {
    /// Validates `samples` and builds a track.
    ///
    /// Headings may be given wrapped; they are unwrapped here. For closed
    /// tracks the lap length is the last `s` plus one more spacing step, and
    /// the closing chord must not exceed the spacing bound.
    pub fn new(mut samples: Vec<ReferenceSample>, closed: bool) -> Result<Self, TrackError> {
        if samples.len() < 2 {
            return Err(TrackError::violation("at least two samples required", 0));
        }
        for (row, smp) in samples.iter().enumerate() {
            let values = [
                smp.s,
                smp.x,
                smp.y,
                smp.psi,
                smp.kappa,
                smp.n_min,
                smp.n_max,
                smp.n_raceline,
                smp.v_raceline,
            ];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(TrackError::violation("non-finite value", row));
            }
        }
        if samples[0].s.abs() > 1e-9 {
            return Err(TrackError::violation("s must start at 0", 0));
        }
        for i in 1..samples.len() {
            let prev_psi = samples[i - 1].psi;
            samples[i].psi = prev_psi + wrap_angle(samples[i].psi - prev_psi);
        }
        for (row, w) in samples.windows(2).enumerate() {
            let row = row + 1;
            let ds = w[1].s - w[0].s;
            if ds <= 0.0 {
                return Err(TrackError::violation("s not increasing", row));
            }
            // Linear interpolation is exact on straight segments, so the
            // spacing bound only matters where the line bends.
            let straight = w[0].kappa == 0.0 && w[1].kappa == 0.0;
            if ds > MAX_SAMPLE_SPACING && !straight {
                return Err(TrackError::violation("sample spacing exceeds 5 m", row));
            }
            if (w[1].psi - w[0].psi).abs() > PI {
                return Err(TrackError::violation("heading discontinuity", row));
            }
        }
        for (row, smp) in samples.iter().enumerate() {
            if !(smp.n_min < 0.0 && smp.n_max > 0.0) {
                return Err(TrackError::violation(
                    "lateral bounds must satisfy n_min < 0 < n_max",
                    row,
                ));
            }
            if !(smp.n_min < smp.n_raceline && smp.n_raceline < smp.n_max) {
                return Err(TrackError::violation("raceline outside lateral bounds", row));
            }
            if smp.v_raceline <= 0.0 {
                return Err(TrackError::violation("raceline speed must be positive", row));
            }
            if 1.0 - smp.n_max * smp.kappa <= 0.0 || 1.0 - smp.n_min * smp.kappa <= 0.0 {
                return Err(TrackError::violation("Frenet singularity", row));
            }
        }

        let last = samples[samples.len() - 1];
        let first = samples[0];
        let (lap_length, closing_psi) = if closed {
            let chord = (first.x - last.x).hypot(first.y - last.y);
            if chord <= 0.0 || chord > MAX_SAMPLE_SPACING {
                return Err(TrackError::violation(
                    "closing gap must be in (0, 5] m",
                    samples.len() - 1,
                ));
            }
            let closing_psi = last.psi + wrap_angle(first.psi - last.psi);
            let step = last.s - samples[samples.len() - 2].s;
            (last.s + step, closing_psi)
        } else {
            (last.s, first.psi)
        };

        Ok(Self {
            samples,
            lap_length,
            closed,
            closing_psi,
        })
    }

    pub fn samples(&self) -> &[ReferenceSample] {
        &self.samples
    }

    pub fn lap_length(&self) -> f64 {
        self.lap_length
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Maps raw progress into `[0, lap_length)` on closed tracks, or clamps
    /// it into `[0, lap_length]` on open ones.
    pub fn wrap_progress(&self, s_raw: f64) -> f64 {
        if !self.closed {
            return s_raw.clamp(0.0, self.lap_length);
        }
        let s = s_raw.rem_euclid(self.lap_length);
        // rem_euclid of a tiny negative can round up to lap_length itself
        if s >= self.lap_length {
            0.0
        } else {
            s
        }
    }

    /// Number of completed laps contained in `s_raw` (negative before the line).
    pub fn lap_index(&self, s_raw: f64) -> i64 {
        if !self.closed {
            return 0;
        }
        s_raw.div_euclid(self.lap_length) as i64
    }

    /// Signed along-track distance from `from` to `to`, taking the shortest
    /// way around on closed tracks.
    pub fn signed_gap(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        if !self.closed {
            return d;
        }
        let l = self.lap_length;
        let mut g = d.rem_euclid(l);
        if g > 0.5 * l {
            g -= l;
        }
        g
    }

    /// Segment index and fraction for `s` (already wrapped or clamped).
    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let n = self.samples.len();
        let idx = self.samples.partition_point(|p| p.s <= s).saturating_sub(1);
        let s0 = self.samples[idx].s;
        let s1 = if idx + 1 < n {
            self.samples[idx + 1].s
        } else if self.closed {
            self.lap_length
        } else {
            // clamped to the final sample on open tracks
            let j = n - 2;
            return (j, 1.0, self.samples[j + 1].s - self.samples[j].s);
        };
        let ds = s1 - s0;
        (idx, ((s - s0) / ds).clamp(0.0, 1.0), ds)
    }

    /// Interpolated reference quantities at progress `s` (any real value on
    /// closed tracks).
    pub fn reference(&self, s: f64) -> RefPoint {
        let s = self.wrap_progress(s);
        let (i, f, ds) = self.locate(s);
        let a = &self.samples[i];
        let (b, b_psi) = if i + 1 < self.samples.len() {
            (&self.samples[i + 1], self.samples[i + 1].psi)
        } else {
            (&self.samples[0], self.closing_psi)
        };
        let lerp = |u: f64, v: f64| u + f * (v - u);
        let dkappa = if ds > 0.0 { (b.kappa - a.kappa) / ds } else { 0.0 };
        RefPoint {
            s,
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            psi: lerp(a.psi, b_psi),
            kappa: lerp(a.kappa, b.kappa),
            dkappa,
            n_min: lerp(a.n_min, b.n_min),
            n_max: lerp(a.n_max, b.n_max),
            n_raceline: lerp(a.n_raceline, b.n_raceline),
            v_raceline: lerp(a.v_raceline, b.v_raceline),
        }
    }

    /// Reference position and its derivative w.r.t. `s` on the segment
    /// containing `s`; used by the projection Newton iteration.
    fn segment_frame(&self, s: f64) -> (RefPoint, f64, f64, f64) {
        let s_w = self.wrap_progress(s);
        let (i, _, ds) = self.locate(s_w);
        let a = &self.samples[i];
        let (b, b_psi) = if i + 1 < self.samples.len() {
            (&self.samples[i + 1], self.samples[i + 1].psi)
        } else {
            (&self.samples[0], self.closing_psi)
        };
        let p = self.reference(s);
        if ds <= 0.0 {
            return (p, p.psi.cos(), p.psi.sin(), 0.0);
        }
        (p, (b.x - a.x) / ds, (b.y - a.y) / ds, (b_psi - a.psi) / ds)
    }

    /// Lateral raceline slope dn/ds, by central difference over `h` metres.
    pub fn raceline_slope(&self, s: f64) -> f64 {
        let h = 0.5;
        (self.reference(s + h).n_raceline - self.reference(s - h).n_raceline) / (2.0 * h)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}
