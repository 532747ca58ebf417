//! Synthetic closed tracks with a heuristic raceline.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, ReferenceSample, TrackDefinition, TrackError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    /// Two straights joined by two semicircles.
    Oval { straight: f64, radius: f64 },
    /// An oval whose first straight carries an S-bend of four arcs.
    Chicane {
        straight: f64,
        radius: f64,
        chicane_radius: f64,
        chicane_angle_deg: f64,
    },
    /// Star-shaped loop with a randomly perturbed polar radius.
    RandomLoop {
        mean_radius: f64,
        harmonics: usize,
        roughness: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Drivable corridor width for the vehicle reference point.
    pub width: f64,
    /// Target sample spacing; the actual spacing divides the lap evenly.
    pub spacing: f64,
    /// Length of the linear curvature ramp at every junction between
    /// segments of an oval or chicane; 0 keeps the curvature steps.
    pub transition: f64,
    pub raceline: RacelineParams,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 12.0,
            spacing: 2.0,
            transition: 30.0,
            raceline: RacelineParams::default(),
        }
    }
}

/// Inputs of the out-in-out raceline heuristic and its speed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RacelineParams {
    pub v_max: f64,
    /// Lateral acceleration used for the cornering speed limit.
    pub ay_budget: f64,
    pub ax_accel: f64,
    pub ax_brake: f64,
    /// Peak raceline offset as a fraction of the half width.
    pub offset_fraction: f64,
    /// Curvature at which the offset reaches ~76% of its peak.
    pub offset_gain_curvature: f64,
}

impl Default for RacelineParams {
    fn default() -> Self {
        Self {
            v_max: 40.0,
            ay_budget: 9.0,
            ax_accel: 4.0,
            ax_brake: 4.0,
            offset_fraction: 0.6,
            offset_gain_curvature: 1.0 / 60.0,
        }
    }
}

struct Centerline {
    length: f64,
    points: Vec<(f64, f64, f64, f64)>,
}

/// Builds a closed synthetic track. Deterministic in `seed`; only the
/// random loop actually consumes randomness.
pub fn synth_track(kind: &SynthKind, params: &SynthParams, seed: u64) -> Result<TrackDefinition, TrackError> {
    let half = 0.5 * params.width;
    if !(params.width > 0.0) || !(params.spacing > 0.0 && params.spacing <= super::MAX_SAMPLE_SPACING) {
        return Err(TrackError::InfeasibleGeometry(
            "width must be positive and spacing in (0, 5] m".into(),
        ));
    }
    if !(params.transition >= 0.0) {
        return Err(TrackError::InfeasibleGeometry(
            "transition length must be non-negative".into(),
        ));
    }
    let center = match *kind {
        SynthKind::Oval { straight, radius } => {
            check_radius(radius, half)?;
            if !(straight >= 0.0) {
                return Err(TrackError::InfeasibleGeometry(
                    "straight length must be non-negative".into(),
                ));
            }
            let segs = [
                (straight, 0.0),
                (PI * radius, 1.0 / radius),
                (straight, 0.0),
                (PI * radius, 1.0 / radius),
            ];
            sample_segments(&segs, params.spacing, params.transition)
        }
        SynthKind::Chicane {
            straight,
            radius,
            chicane_radius,
            chicane_angle_deg,
        } => {
            check_radius(radius, half)?;
            check_radius(chicane_radius, half)?;
            let th = chicane_angle_deg.to_radians();
            if !(th > 0.0 && th < PI / 2.0) {
                return Err(TrackError::InfeasibleGeometry(
                    "chicane angle must be in (0, 90) deg".into(),
                ));
            }
            let span = 4.0 * chicane_radius * th.sin();
            if straight <= span {
                return Err(TrackError::InfeasibleGeometry(format!(
                    "straight {straight} m too short for a {span:.1} m chicane"
                )));
            }
            let lead = 0.5 * (straight - span);
            let arc = chicane_radius * th;
            let k = 1.0 / chicane_radius;
            let segs = [
                (lead, 0.0),
                (arc, k),
                (arc, -k),
                (arc, -k),
                (arc, k),
                (lead, 0.0),
                (PI * radius, 1.0 / radius),
                (straight, 0.0),
                (PI * radius, 1.0 / radius),
            ];
            sample_segments(&segs, params.spacing, params.transition)
        }
        SynthKind::RandomLoop {
            mean_radius,
            harmonics,
            roughness,
        } => random_loop(mean_radius, harmonics, roughness, half, params.spacing, seed)?,
    };
    build_track(center, params)
}

fn check_radius(radius: f64, half: f64) -> Result<(), TrackError> {
    if !(radius > half) {
        return Err(TrackError::InfeasibleGeometry(format!(
            "radius {radius} m does not exceed half width {half} m (Frenet singularity)"
        )));
    }
    Ok(())
}

/// Samples a closed chain of constant-curvature segments starting at the
/// origin heading along +x. With `transition > 0` the curvature profile is
/// box-filtered over that length first, turning every step into a linear
/// ramp, and the centerline is integrated numerically.
fn sample_segments(segs: &[(f64, f64)], spacing: f64, transition: f64) -> Centerline {
    let length: f64 = segs.iter().map(|s| s.0).sum();
    let count = (length / spacing).ceil() as usize;
    let ds = length / count as f64;
    if transition > 0.0 {
        return sample_smoothed(segs, length, count, transition);
    }

    let mut starts = Vec::with_capacity(segs.len());
    let (mut x, mut y, mut psi, mut s0) = (0.0, 0.0, 0.0, 0.0);
    for &(len, k) in segs {
        starts.push((s0, x, y, psi));
        let (nx, ny, npsi) = advance(x, y, psi, k, len);
        x = nx;
        y = ny;
        psi = npsi;
        s0 += len;
    }

    let mut points = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let s = i as f64 * ds;
        while seg + 1 < segs.len() && s >= starts[seg + 1].0 {
            seg += 1;
        }
        let (ss, sx, sy, spsi) = starts[seg];
        let k = segs[seg].1;
        let (px, py, ppsi) = advance(sx, sy, spsi, k, s - ss);
        points.push((px, py, ppsi, k));
    }
    Centerline { length, points }
}

fn sample_smoothed(segs: &[(f64, f64)], length: f64, count: usize, width: f64) -> Centerline {
    let ds = length / count as f64;
    // cumulative heading at segment starts
    let mut starts = Vec::with_capacity(segs.len());
    let (mut s0, mut k0) = (0.0, 0.0);
    for &(len, k) in segs {
        starts.push((s0, k0, k));
        s0 += len;
        k0 += k * len;
    }
    let turn = k0;
    let heading_integral = |s: f64| {
        let laps = s.div_euclid(length);
        let r = s - laps * length;
        let i = starts.partition_point(|p| p.0 <= r).saturating_sub(1);
        let (ss, kk, k) = starts[i];
        laps * turn + kk + k * (r - ss)
    };
    let kappa = |s: f64| (heading_integral(s + 0.5 * width) - heading_integral(s - 0.5 * width)) / width;

    let sub = 16;
    let h = ds / sub as f64;
    let deriv = |s: f64, psi: f64| (psi.cos(), psi.sin(), kappa(s));
    let mut raw = Vec::with_capacity(count + 1);
    let (mut x, mut y, mut psi) = (0.0, 0.0, 0.0);
    for i in 0..=count {
        let s = i as f64 * ds;
        raw.push((x, y, psi, kappa(s)));
        for j in 0..sub {
            let t = s + j as f64 * h;
            let a = deriv(t, psi);
            let b = deriv(t + 0.5 * h, psi + 0.5 * h * a.2);
            let c = deriv(t + 0.5 * h, psi + 0.5 * h * b.2);
            let d = deriv(t + h, psi + h * c.2);
            x += h / 6.0 * (a.0 + 2.0 * b.0 + 2.0 * c.0 + d.0);
            y += h / 6.0 * (a.1 + 2.0 * b.1 + 2.0 * c.1 + d.1);
            psi += h / 6.0 * (a.2 + 2.0 * b.2 + 2.0 * c.2 + d.2);
        }
    }
    // spread the residual closure gap along the lap
    let (ex, ey, _, _) = raw[count];
    let points = raw[..count]
        .iter()
        .enumerate()
        .map(|(i, &(x, y, psi, k))| {
            let f = i as f64 / count as f64;
            (x - f * ex, y - f * ey, psi, k)
        })
        .collect();
    Centerline { length, points }
}

fn advance(x: f64, y: f64, psi: f64, k: f64, len: f64) -> (f64, f64, f64) {
    if k == 0.0 {
        (x + len * psi.cos(), y + len * psi.sin(), psi)
    } else {
        let p1 = psi + k * len;
        (x + (p1.sin() - psi.sin()) / k, y - (p1.cos() - psi.cos()) / k, p1)
    }
}

fn random_loop(
    mean_radius: f64,
    harmonics: usize,
    roughness: f64,
    half: f64,
    spacing: f64,
    seed: u64,
) -> Result<Centerline, TrackError> {
    if !(mean_radius > 4.0 * half) {
        return Err(TrackError::InfeasibleGeometry(
            "mean radius must exceed twice the width".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64)> = (2..=harmonics.max(2))
        .map(|k| {
            let amp = rng.gen_range(-1.0..1.0) / k as f64;
            let phase = rng.gen_range(0.0..2.0 * PI);
            (k as f64, amp, phase)
        })
        .collect();

    let mut scale = roughness;
    for _ in 0..40 {
        if let Some(c) = polar_loop(mean_radius, &terms, scale, half, spacing) {
            return Ok(c);
        }
        scale *= 0.85;
    }
    Err(TrackError::InfeasibleGeometry(
        "could not find a non-singular random loop".into(),
    ))
}

fn polar_loop(r0: f64, terms: &[(f64, f64, f64)], scale: f64, half: f64, spacing: f64) -> Option<Centerline> {
    // r(θ) = r0 (1 + scale Σ a_k cos(kθ + φ_k)) and its θ-derivatives
    let eval = |th: f64| {
        let (mut r, mut dr, mut ddr) = (1.0, 0.0, 0.0);
        for &(k, a, ph) in terms {
            let arg = k * th + ph;
            r += scale * a * arg.cos();
            dr -= scale * a * k * arg.sin();
            ddr -= scale * a * k * k * arg.cos();
        }
        (r0 * r, r0 * dr, r0 * ddr)
    };
    let curvature = |th: f64| {
        let (r, dr, ddr) = eval(th);
        (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)
    };

    let fine = 20_000;
    let dth = 2.0 * PI / fine as f64;
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let speed = |th: f64| {
        let (r, dr, _) = eval(th);
        (r * r + dr * dr).sqrt()
    };
    for i in 0..fine {
        let th = i as f64 * dth;
        if eval(th).0 <= 0.0 || curvature(th).abs() * half * 1.5 >= 1.0 {
            return None;
        }
        let seg = 0.5 * (speed(th) + speed(th + dth)) * dth;
        cum.push(cum[i] + seg);
    }
    let length = cum[fine];
    let count = (length / spacing).ceil() as usize;
    let ds = length / count as f64;

    let mut points = Vec::with_capacity(count);
    let mut j = 0;
    for i in 0..count {
        let s = i as f64 * ds;
        while j + 1 < fine && cum[j + 1] <= s {
            j += 1;
        }
        let f = (s - cum[j]) / (cum[j + 1] - cum[j]);
        let th = (j as f64 + f) * dth;
        let (r, dr, _) = eval(th);
        let (sin, cos) = th.sin_cos();
        let dx = dr * cos - r * sin;
        let dy = dr * sin + r * cos;
        points.push((r * cos, r * sin, dy.atan2(dx), curvature(th)));
    }
    Some(Centerline { length, points })
}

fn build_track(center: Centerline, params: &SynthParams) -> Result<TrackDefinition, TrackError> {
    let n = center.points.len();
    let ds = center.length / n as f64;
    let half = 0.5 * params.width;
    let rl = &params.raceline;

    let kappa: Vec<f64> = center.points.iter().map(|p| p.3).collect();
    let narrow = gaussian_smooth(&kappa, 20.0 / ds);
    let wide = gaussian_smooth(&kappa, 60.0 / ds);
    let n_rl: Vec<f64> = narrow
        .iter()
        .zip(&wide)
        .map(|(a, b)| rl.offset_fraction * half * ((2.0 * a - b) / rl.offset_gain_curvature).tanh())
        .collect();

    // Raceline polyline in the plane; curvature by three-point circumcircle.
    let pts: Vec<(f64, f64)> = center
        .points
        .iter()
        .zip(&n_rl)
        .map(|(&(x, y, psi, _), &o)| (x - o * psi.sin(), y + o * psi.cos()))
        .collect();
    let mut k_rl = vec![0.0; n];
    let mut step = vec![0.0; n];
    for i in 0..n {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        k_rl[i] = menger_curvature(a, b, c);
        step[i] = (c.0 - b.0).hypot(c.1 - b.1);
    }
    let k_rl = gaussian_smooth(&k_rl, 5.0 / ds);

    let mut v: Vec<f64> = k_rl
        .iter()
        .map(|k| (rl.ay_budget / k.abs().max(1e-9)).sqrt().min(rl.v_max))
        .collect();
    // start both passes at the global minimum, which no pass can raise
    let start = (0..n).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap_or(0);
    for k in 0..n {
        let i = (start + k) % n;
        let j = (i + 1) % n;
        v[j] = v[j].min((v[i] * v[i] + 2.0 * rl.ax_accel * step[i]).sqrt());
    }
    for k in 0..n {
        let j = (start + n - k) % n;
        let i = (j + n - 1) % n;
        v[i] = v[i].min((v[j] * v[j] + 2.0 * rl.ax_brake * step[i]).sqrt());
    }

    let samples = center
        .points
        .iter()
        .enumerate()
        .map(|(i, &(x, y, psi, kappa))| ReferenceSample {
            s: i as f64 * ds,
            x,
            y,
            psi: wrap_angle(psi),
            kappa,
            n_min: -half,
            n_max: half,
            n_raceline: n_rl[i],
            v_raceline: v[i],
        })
        .collect();
    TrackDefinition::new(samples, true).map_err(|e| TrackError::InfeasibleGeometry(e.to_string()))
}

fn menger_curvature(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let ab = (b.0 - a.0).hypot(b.1 - a.1);
    let bc = (c.0 - b.0).hypot(c.1 - b.1);
    let ca = (a.0 - c.0).hypot(a.1 - c.1);
    let denom = ab * bc * ca;
    if denom <= 0.0 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

/// Periodic Gaussian smoothing with standard deviation `sigma` in samples.
fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    let n = values.len();
    let radius = (3.0 * sigma).ceil() as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    (0..n)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(w_idx, w)| {
                    let k = w_idx as isize - radius;
                    let j = (i as isize + k).rem_euclid(n as isize) as usize;
                    w * values[j]
                })
                .sum::<f64>()
                / total
        })
        .collect()
}
