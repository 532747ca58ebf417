//! Look-ahead geometry features for the policy observation.

use serde::{Deserialize, Serialize};

use super::{wrap_angle, TrackDefinition};

/// Channel order of [`GeometryFeatures`].
pub const GEOMETRY_CHANNELS: [&str; 6] = ["kappa", "delta_psi", "n_min", "n_max", "n_raceline", "v_raceline"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub n_lookahead: usize,
    /// Distance between look-ahead samples, in metres.
    pub spacing: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            n_lookahead: 20,
            spacing: 10.0,
        }
    }
}

/// Channel-major `[channels × n_lookahead]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFeatures {
    pub n_lookahead: usize,
    pub data: Vec<f64>,
}

impl GeometryFeatures {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_lookahead..(c + 1) * self.n_lookahead]
    }
}

impl TrackDefinition {
    /// Samples the reference channels at `s, s+Δ, …` (wrapping on closed
    /// tracks, clamping on open ones). `delta_psi` is the unwrapped heading
    /// change relative to the heading at `s`.
    pub fn query_geometry(&self, s: f64, cfg: &GeometryConfig) -> GeometryFeatures {
        let n = cfg.n_lookahead;
        let mut data = vec![0.0; GEOMETRY_CHANNELS.len() * n];
        let base = self.reference(s);
        let mut prev_psi = base.psi;
        let mut delta = 0.0;
        for k in 0..n {
            let r = self.reference(s + k as f64 * cfg.spacing);
            delta += wrap_angle(r.psi - prev_psi);
            prev_psi = r.psi;
            let values = [r.kappa, delta, r.n_min, r.n_max, r.n_raceline, r.v_raceline];
            for (c, v) in values.into_iter().enumerate() {
                data[c * n + k] = v;
            }
        }
        GeometryFeatures { n_lookahead: n, data }
    }
}
