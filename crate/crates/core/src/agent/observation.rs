//! Policy inputs: ego state, relative opponent state and look-ahead geometry,
//! each mapped affinely into `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::neural::Tensor;
use crate::planner::ConstraintLimits;
use crate::sim::{RaceEnv, VehicleState};
use crate::track::{GeometryConfig, TrackDefinition, GEOMETRY_CHANNELS};

pub const EGO_FEATURES: usize = 7;
pub const OPPONENT_FEATURES: usize = 4;

/// Closed interval mapped onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn symmetric(r: f64) -> Self {
        Self { lo: -r, hi: r }
    }

    /// Affine map onto `[-1, 1]`, clamped. Non-finite input maps to 0.
    pub fn normalize(&self, x: f64) -> f64 {
        let y = 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0;
        if y.is_nan() {
            0.0
        } else {
            y.clamp(-1.0, 1.0)
        }
    }
}

/// Static normalization ranges. They travel with a checkpoint so a policy
/// sees identically scaled inputs on every track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationConfig {
    /// Opponents further away than this along the track are reported absent.
    pub detection_range: f64,
    pub geometry: GeometryConfig,
    /// Lateral offsets, including track bounds and raceline.
    pub lateral: Bound,
    pub heading: Bound,
    pub speed: Bound,
    pub path_curvature: Bound,
    pub accel: Bound,
    pub utilization: Bound,
    pub rel_lateral: Bound,
    pub rel_speed: Bound,
    pub track_curvature: Bound,
    pub heading_change: Bound,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self::from_limits(&ConstraintLimits::default())
    }
}

impl ObservationConfig {
    pub fn from_limits(limits: &ConstraintLimits) -> Self {
        Self {
            detection_range: 150.0,
            geometry: GeometryConfig::default(),
            lateral: Bound::symmetric(10.0),
            heading: Bound::symmetric(0.5),
            speed: Bound::new(0.0, limits.v_max),
            path_curvature: Bound::symmetric(limits.kappa_max),
            accel: Bound::symmetric(limits.ax_max),
            utilization: Bound::new(0.0, 1.0),
            rel_lateral: Bound::symmetric(20.0),
            rel_speed: Bound::symmetric(20.0),
            track_curvature: Bound::symmetric(0.05),
            heading_change: Bound::symmetric(std::f64::consts::PI),
        }
    }

    pub fn track_shape(&self) -> [usize; 2] {
        [GEOMETRY_CHANNELS.len(), self.geometry.n_lookahead]
    }

    fn channel_bound(&self, c: usize) -> Bound {
        match c {
            0 => self.track_curvature,
            1 => self.heading_change,
            2..=4 => self.lateral,
            _ => self.speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub ego: [f64; EGO_FEATURES],
    /// `s_rel, n_rel, v_rel, presence` with presence `1` or `-1`.
    pub opponent: [f64; OPPONENT_FEATURES],
    /// Channel-major look-ahead matrix.
    pub track: Vec<f64>,
}

impl Observation {
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.ego.iter().chain(&self.opponent).chain(&self.track).copied()
    }

    pub fn to_tensors(&self, cfg: &ObservationConfig) -> [Tensor; 3] {
        [
            Tensor::vector(self.ego.to_vec()),
            Tensor::vector(self.opponent.to_vec()),
            Tensor {
                shape: cfg.track_shape().to_vec(),
                data: self.track.clone(),
            },
        ]
    }
}

/// Observation of `ego` with an optional opponent on `track`.
pub fn observe(
    ego: &VehicleState,
    opponent: Option<&VehicleState>,
    track: &TrackDefinition,
    limits: &ConstraintLimits,
    cfg: &ObservationConfig,
) -> Observation {
    let lap = track.lap_length();
    let s_frac = track.wrap_progress(ego.s) / lap;
    let ego_block = [
        2.0 * s_frac - 1.0,
        cfg.lateral.normalize(ego.n),
        cfg.heading.normalize(ego.mu),
        cfg.speed.normalize(ego.v),
        cfg.path_curvature.normalize(ego.kappa),
        cfg.accel.normalize(ego.a_long),
        cfg.utilization.normalize(limits.gg_utilization(ego.a_long, ego.a_lat)),
    ]
    .map(|v| v.clamp(-1.0, 1.0));

    let mut opp_block = [0.0, 0.0, 0.0, -1.0];
    if let Some(o) = opponent {
        let ds = track.signed_gap(ego.s, o.s);
        if ds.abs() <= cfg.detection_range {
            opp_block = [
                Bound::symmetric(cfg.detection_range).normalize(ds),
                cfg.rel_lateral.normalize(o.n - ego.n),
                cfg.rel_speed.normalize(o.v - ego.v),
                1.0,
            ];
        }
    }

    let mut geo = track.query_geometry(ego.s, &cfg.geometry);
    let n = geo.n_lookahead;
    for (i, v) in geo.data.iter_mut().enumerate() {
        *v = cfg.channel_bound(i / n).normalize(*v);
    }
    Observation {
        ego: ego_block,
        opponent: opp_block,
        track: geo.data,
    }
}

/// Observation of the ego in a running environment.
pub fn build_observation(env: &RaceEnv, cfg: &ObservationConfig) -> Observation {
    observe(
        env.ego(),
        Some(env.opponent()),
        env.track(),
        &env.config().planner.limits,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Footprint;
    use crate::track::{synth_track, SynthKind, SynthParams};
    use proptest::prelude::*;

    fn oval() -> TrackDefinition {
        synth_track(
            &SynthKind::Oval {
                straight: 250.0,
                radius: 60.0,
            },
            &SynthParams::default(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn half_lap_maps_to_zero() {
        let t = oval();
        let ego = VehicleState::on_raceline(&t, t.lap_length() / 2.0, 30.0, Footprint::default());
        let o = observe(
            &ego,
            None,
            &t,
            &ConstraintLimits::default(),
            &ObservationConfig::default(),
        );
        assert!(o.ego[0].abs() < 1e-12);
    }

    #[test]
    fn distant_opponent_is_absent() {
        let t = oval();
        let cfg = ObservationConfig::default();
        let ego = VehicleState::on_raceline(&t, 10.0, 30.0, Footprint::default());
        let opp = VehicleState::on_raceline(&t, 510.0, 30.0, Footprint::default());
        let o = observe(&ego, Some(&opp), &t, &ConstraintLimits::default(), &cfg);
        assert_eq!(o.opponent, [0.0, 0.0, 0.0, -1.0]);

        let near = VehicleState::on_raceline(&t, 85.0, 25.0, Footprint::default());
        let o = observe(&ego, Some(&near), &t, &ConstraintLimits::default(), &cfg);
        assert_eq!(o.opponent[3], 1.0);
        assert!((o.opponent[0] - 0.5).abs() < 1e-12);
        assert!((o.opponent[2] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn opponent_across_the_start_line_is_near() {
        let t = oval();
        let ego = VehicleState::on_raceline(&t, t.lap_length() - 5.0, 30.0, Footprint::default());
        let opp = VehicleState::on_raceline(&t, 25.0, 30.0, Footprint::default());
        let o = observe(
            &ego,
            Some(&opp),
            &t,
            &ConstraintLimits::default(),
            &ObservationConfig::default(),
        );
        assert!((o.opponent[0] - 30.0 / 150.0).abs() < 1e-9);
    }

    #[test]
    fn track_block_shape() {
        let t = oval();
        let cfg = ObservationConfig::default();
        let ego = VehicleState::on_raceline(&t, 0.0, 30.0, Footprint::default());
        let o = observe(&ego, None, &t, &ConstraintLimits::default(), &cfg);
        assert_eq!(o.track.len(), 6 * 20);
        let [_, _, track] = o.to_tensors(&cfg);
        assert_eq!(track.shape, vec![6, 20]);
    }

    proptest! {
        #[test]
        fn every_entry_is_normalized(
            s in -5000.0..5000.0f64,
            n in -50.0..50.0f64,
            mu in -4.0..4.0f64,
            v in -10.0..200.0f64,
            kappa in -2.0..2.0f64,
            a_long in -100.0..100.0f64,
            a_lat in -100.0..100.0f64,
            ds in -400.0..400.0f64,
            dn in -50.0..50.0f64,
            v_opp in -10.0..200.0f64,
        ) {
            let t = oval();
            let mut ego = VehicleState::on_raceline(&t, 0.0, 1.0, Footprint::default());
            ego.s = s; ego.n = n; ego.mu = mu; ego.v = v;
            ego.kappa = kappa; ego.a_long = a_long; ego.a_lat = a_lat;
            let mut opp = ego.clone();
            opp.s = s + ds; opp.n = n + dn; opp.v = v_opp;
            let o = observe(&ego, Some(&opp), &t, &ConstraintLimits::default(), &ObservationConfig::default());
            prop_assert!(o.iter().all(|x| (-1.0..=1.0).contains(&x)));
        }
    }
}
