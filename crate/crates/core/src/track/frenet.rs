//! Conversions between Cartesian and Frenet coordinates.

use serde::{Deserialize, Serialize};

use super::{wrap_angle, TrackDefinition, TrackError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrenetPose {
    /// Progress, wrapped into `[0, lap_length)` on closed tracks.
    pub s: f64,
    pub n: f64,
    /// Heading relative to the reference tangent.
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Coarse search window around a hint, in metres.
const LOCAL_WINDOW: f64 = 30.0;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 30;

impl TrackDefinition {
    /// Maps `(s, n)` to the plane. The returned heading is the reference
    /// heading at `s`.
    pub fn frenet_to_cartesian(&self, s: f64, n: f64) -> Result<CartesianPose, TrackError> {
        let r = self.reference(s);
        if 1.0 - n * r.kappa <= 0.0 {
            return Err(TrackError::SingularTransform { s, n });
        }
        let (sin, cos) = r.psi.sin_cos();
        Ok(CartesianPose {
            x: r.x - n * sin,
            y: r.y + n * cos,
            psi: r.psi,
        })
    }

    /// Projects a point onto the reference line.
    ///
    /// With `s_hint` only samples within a local window are considered for
    /// the coarse search; otherwise all samples are scanned. The coarse
    /// estimate is refined by Newton iteration on the orthogonality residual
    /// of the interpolated frame, with a bracketed bisection fallback.
    pub fn cartesian_to_frenet(
        &self,
        x: f64,
        y: f64,
        psi: Option<f64>,
        s_hint: Option<f64>,
    ) -> Result<FrenetPose, TrackError> {
        let s0 = self.coarse_nearest(x, y, s_hint);
        let s = self.refine_projection(x, y, s0);
        let r = self.reference(s);
        let (sin, cos) = r.psi.sin_cos();
        let n = -(x - r.x) * sin + (y - r.y) * cos;
        let width = (r.n_max - r.n_min).max(1e-9);
        let along = (x - r.x) * cos + (y - r.y) * sin;
        let distance = n.hypot(along);
        if n.abs() > 2.0 * width || 1.0 - n * r.kappa <= 0.0 || along.abs() > 1e-6 * (1.0 + distance) {
            return Err(TrackError::OffTrackProjection { x, y, distance });
        }
        let mu = psi.map(|p| wrap_angle(p - r.psi)).unwrap_or(0.0);
        Ok(FrenetPose {
            s: self.wrap_progress(s),
            n,
            mu,
        })
    }

    fn coarse_nearest(&self, x: f64, y: f64, s_hint: Option<f64>) -> f64 {
        let samples = self.samples();
        let d2 = |i: usize| {
            let p = &samples[i];
            (p.x - x).powi(2) + (p.y - y).powi(2)
        };
        let nearest = |range: &mut dyn Iterator<Item = usize>| {
            range.fold((f64::INFINITY, 0usize), |best, i| {
                let d = d2(i);
                if d < best.0 {
                    (d, i)
                } else {
                    best
                }
            })
        };
        let mut best = (f64::INFINITY, 0usize);
        if let Some(h) = s_hint {
            let h = self.wrap_progress(h);
            best = nearest(&mut (0..samples.len()).filter(|&i| self.signed_gap(h, samples[i].s).abs() <= LOCAL_WINDOW));
        }
        if best.0.is_infinite() {
            best = nearest(&mut (0..samples.len()));
        }
        samples[best.1].s
    }

    /// Orthogonality residual `(p - P(s)) · T(s)` and its derivative in `s`.
    fn residual(&self, x: f64, y: f64, s: f64) -> (f64, f64) {
        let (r, dx, dy, dpsi) = self.segment_frame(s);
        let (sin, cos) = r.psi.sin_cos();
        let ex = x - r.x;
        let ey = y - r.y;
        let g = ex * cos + ey * sin;
        let normal = -ex * sin + ey * cos;
        let dg = -(dx * cos + dy * sin) + dpsi * normal;
        (g, dg)
    }

    fn refine_projection(&self, x: f64, y: f64, s0: f64) -> f64 {
        let reach = 4.0 * super::MAX_SAMPLE_SPACING;
        let mut s = s0;
        for _ in 0..MAX_NEWTON {
            let (g, dg) = self.residual(x, y, s);
            if dg >= 0.0 || !dg.is_finite() {
                break;
            }
            let step = g / dg;
            s -= step;
            if (s - s0).abs() > reach {
                break;
            }
            if step.abs() < NEWTON_TOL {
                return self.clamp_open(s);
            }
        }
        self.bisect_projection(x, y, s0)
    }

    fn clamp_open(&self, s: f64) -> f64 {
        if self.is_closed() {
            s
        } else {
            s.clamp(0.0, self.lap_length())
        }
    }

    /// The residual is decreasing through the root; widen a bracket around
    /// the coarse estimate until it changes sign, then bisect.
    fn bisect_projection(&self, x: f64, y: f64, s0: f64) -> f64 {
        let mut half = super::MAX_SAMPLE_SPACING;
        let (mut lo, mut hi) = (s0 - half, s0 + half);
        while half < 50.0 {
            if self.residual(x, y, lo).0 >= 0.0 && self.residual(x, y, hi).0 <= 0.0 {
                break;
            }
            half *= 2.0;
            lo = s0 - half;
            hi = s0 + half;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.residual(x, y, mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        self.clamp_open(0.5 * (lo + hi))
    }
}
