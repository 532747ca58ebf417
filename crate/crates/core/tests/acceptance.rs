//! Acceptance suite. Runs every criterion in order and prints one PASS/FAIL
//! line each; exits non-zero if any criterion fails.
//!
//! `cargo test --test acceptance -- c7 c8` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use racecraft::agent::{
    evaluate, evaluate_static, policy_from_checkpoint, train, ActorCritic, AgentCheckpoint, BanditEnv, EvalReport,
    PpoConfig, RolloutEnv, TrainConfig,
};
use racecraft::bench::{cmd_timing, cmd_train, RunConfig};
use racecraft::neural::{Activation, BranchSpec, HeadSpec, LayerSpec, Network, NetworkSpec, Tensor};
use racecraft::planner::{
    check_feasibility, gen_lateral, gen_longitudinal, generate_candidates, plan, predict_opponent, CandidateTrajectory,
    ConstraintLimits, EndState, Mode, ObservedVehicle, PlannerConfig, StartState, TrajPoint, Verdict, WeightLibrary,
    WeightSet,
};
use racecraft::sim::{format_table, MetricsTable, ScenarioConfig, SimConfig};
use racecraft::track::{synth_track, SynthKind, SynthParams, TrackDefinition};

// ---- pinned tolerances -------------------------------------------------

const POLY_RESIDUAL: f64 = 1e-9;
const POLY_INSTANCES: usize = 10_000;
const POLY_BUDGET_S: f64 = 5.0;
const ROUND_TRIP_TOL: f64 = 1e-6;
const ROUND_TRIP_POINTS: usize = 10_000;
const ROUND_TRIP_BUDGET_S: f64 = 10.0;
const FEAS_CANDIDATES: usize = 1_000;
const FEAS_BUDGET_S: f64 = 10.0;
const ARGMIN_CALLS: usize = 100;
const GRAD_H: f64 = 1e-5;
const GRAD_REL_ERR: f64 = 1e-6;
const GRAD_BUDGET_S: f64 = 30.0;
const BANDIT_UPDATES: u64 = 200;
const BANDIT_P_BEST: f64 = 0.95;
const BANDIT_BUDGET_S: f64 = 60.0;
const MIN_SCENARIOS: usize = 50;
const BASELINE_BUDGET_S: f64 = 15.0 * 60.0;
const MAX_COLLISION_PCT: f64 = 2.0;
const TIME_RATIO: f64 = 0.8;
const MIN_MODES: usize = 2;
const MAX_TRAIN_STEPS: u64 = 2_000_000;
const UNSEEN_MAX_COLLISION_PCT: f64 = 5.0;
const UNSEEN_BUDGET_S: f64 = 15.0 * 60.0;
const OVERHEAD_RATIO: f64 = 0.25;

// ---- shared fixtures ---------------------------------------------------

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Configuration the reference checkpoint was trained with.
fn reference_config() -> RunConfig {
    RunConfig::load(Some(&manifest().join("configs/reference.toml")), &[]).expect("reference config")
}

fn reference_checkpoint_path() -> PathBuf {
    manifest().join("assets/reference_agent.json")
}

/// The shipped checkpoint, or a fresh one trained from the reference
/// configuration when it is missing.
fn reference_checkpoint() -> (AgentCheckpoint, String) {
    let path = reference_checkpoint_path();
    if path.exists() {
        let ck = AgentCheckpoint::load(&path).expect("checkpoint loads");
        return (ck, format!("shipped {}", path.display()));
    }
    let out = std::env::temp_dir().join("racecraft-acceptance-train");
    let mut cfg = reference_config();
    cfg.out = out.clone();
    let t0 = Instant::now();
    let s = cmd_train(&cfg, None).expect("training");
    (
        AgentCheckpoint::load(&s.checkpoint).expect("checkpoint loads"),
        format!("trained now in {:.0} s", t0.elapsed().as_secs_f64()),
    )
}

struct Fixture {
    cfg: RunConfig,
    sim: SimConfig,
    track: Arc<TrackDefinition>,
    unseen: Arc<TrackDefinition>,
    scenarios: Vec<ScenarioConfig>,
    unseen_scenarios: Vec<ScenarioConfig>,
}

impl Fixture {
    fn new() -> Self {
        let cfg = reference_config();
        let track = Arc::new(cfg.track.build().unwrap());
        let unseen = Arc::new(cfg.unseen_track.build().unwrap());
        let mix = cfg.train.ppo.opponent_mix;
        Self {
            sim: cfg.sim_config(),
            scenarios: cfg.scenarios.scenarios(track.lap_length(), mix),
            unseen_scenarios: cfg.scenarios.scenarios(unseen.lap_length(), mix),
            track,
            unseen,
            cfg,
        }
    }

    fn statics(&self, track: &Arc<TrackDefinition>, scenarios: &[ScenarioConfig]) -> Vec<(Mode, EvalReport)> {
        Mode::ALL
            .iter()
            .map(|&m| (m, evaluate_static(m, track.clone(), &self.sim, scenarios).unwrap()))
            .collect()
    }
}

fn table(rows: &[(&str, &EvalReport)]) -> String {
    let rows: Vec<(String, MetricsTable)> = rows.iter().map(|(l, r)| (l.to_string(), r.metrics)).collect();
    let mut s = format_table(&rows);
    for (l, m) in &rows {
        s.push_str(&m.csv_row(l));
        s.push('\n');
    }
    s
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- criterion 1 -------------------------------------------------------

fn quintic_oracle(n0: f64, d0: f64, dd0: f64, n_end: f64, t: f64) -> Vector6<f64> {
    let row = |t: f64, k: usize| -> [f64; 6] {
        let mut r = [0.0; 6];
        for (i, c) in r.iter_mut().enumerate() {
            *c = match k {
                0 => t.powi(i as i32),
                1 if i >= 1 => i as f64 * t.powi(i as i32 - 1),
                2 if i >= 2 => (i * (i - 1)) as f64 * t.powi(i as i32 - 2),
                _ => 0.0,
            };
        }
        r
    };
    let rows = [row(0.0, 0), row(0.0, 1), row(0.0, 2), row(t, 0), row(t, 1), row(t, 2)];
    let m = Matrix6::from_fn(|i, j| rows[i][j]);
    m.lu().solve(&Vector6::new(n0, d0, dd0, n_end, 0.0, 0.0)).unwrap()
}

fn start(s: f64, s_dot: f64, s_ddot: f64, n: f64, n_dot: f64, n_ddot: f64) -> StartState {
    StartState {
        s,
        n,
        s_dot,
        s_ddot,
        n_dot,
        n_ddot,
    }
}

fn c1_polynomials() -> Outcome {
    let t0 = Instant::now();
    let q = gen_lateral(&start(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 1.0, 2.0).unwrap();
    let x = quintic_oracle(0.0, 0.0, 0.0, 1.0, 2.0);
    let example_err = (0..6).map(|i| (q.0[i] - x[i]).abs()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..POLY_INSTANCES {
        let st = start(
            rng.gen_range(0.0..1000.0),
            rng.gen_range(0.0..60.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-6.0..6.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        );
        let t = rng.gen_range(0.5..5.0);
        let (v_end, n_end) = (rng.gen_range(0.0..60.0), rng.gen_range(-6.0..6.0));
        let q = gen_longitudinal(&st, v_end, t).unwrap();
        let (s0, v0, a0) = q.eval(0.0);
        let (_, v1, a1) = q.eval(t);
        // position residual relative to the magnitude of s
        for r in [
            (s0 - st.s) / (1.0 + st.s.abs()),
            v0 - st.s_dot,
            a0 - st.s_ddot,
            v1 - v_end,
            a1,
        ] {
            worst = worst.max(r.abs());
        }
        let l = gen_lateral(&st, n_end, t).unwrap();
        let (n0, d0, dd0) = l.eval(0.0);
        let (n1, d1, dd1) = l.eval(t);
        for r in [n0 - st.n, d0 - st.n_dot, dd0 - st.n_ddot, n1 - n_end, d1, dd1] {
            worst = worst.max(r.abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst < POLY_RESIDUAL && example_err < POLY_RESIDUAL && secs < POLY_BUDGET_S,
        format!("max residual {worst:.1e} over {POLY_INSTANCES}, example vs 6x6 solve {example_err:.1e}, {secs:.2} s"),
    )
}

// ---- criterion 2 -------------------------------------------------------

fn c2_round_trip() -> Outcome {
    let t0 = Instant::now();
    let p = SynthParams::default();
    let tracks = [
        (
            "oval",
            synth_track(
                &SynthKind::Oval {
                    straight: 250.0,
                    radius: 60.0,
                },
                &p,
                0,
            )
            .unwrap(),
        ),
        (
            "chicane",
            synth_track(
                &SynthKind::Chicane {
                    straight: 300.0,
                    radius: 60.0,
                    chicane_radius: 40.0,
                    chicane_angle_deg: 30.0,
                },
                &p,
                0,
            )
            .unwrap(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (_, t) in &tracks {
        let l = t.lap_length();
        for _ in 0..ROUND_TRIP_POINTS {
            let s = rng.gen_range(0.0..l);
            let r = t.reference(s);
            let n = rng.gen_range(r.n_min..=r.n_max);
            let c = t.frenet_to_cartesian(s, n).unwrap();
            let f = t.cartesian_to_frenet(c.x, c.y, None, None).unwrap();
            let ds = (f.s - s + l / 2.0).rem_euclid(l) - l / 2.0;
            worst = worst.max(ds.abs()).max((f.n - n).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst < ROUND_TRIP_TOL && secs < ROUND_TRIP_BUDGET_S,
        format!("max error {worst:.1e} m over 2x{ROUND_TRIP_POINTS} points, {secs:.2} s"),
    )
}

// ---- criterion 3 -------------------------------------------------------

/// Pointwise hard constraints, written out independently.
fn naive_feasible(traj: &CandidateTrajectory, l: &ConstraintLimits) -> bool {
    traj.points.iter().all(|p| {
        let gg = (p.a_long.abs() / l.ax_max).powf(l.p_exponent) + (p.a_lat.abs() / l.ay_max).powf(l.p_exponent);
        p.kappa_path.abs() <= l.kappa_max
            && p.v <= l.v_max
            && p.n_min <= p.n
            && p.n <= p.n_max
            && p.a_long <= l.ax_eng
            && gg <= 1.0
    })
}

fn single_point(f: impl Fn(&mut TrajPoint)) -> CandidateTrajectory {
    let mut p = TrajPoint {
        t: 0.0,
        s: 0.0,
        s_dot: 10.0,
        s_ddot: 0.0,
        n: 0.0,
        n_dot: 0.0,
        n_ddot: 0.0,
        n_prime: 0.0,
        v: 10.0,
        a_long: 0.0,
        a_lat: 0.0,
        kappa_path: 0.0,
        x: 0.0,
        y: 0.0,
        psi: 0.0,
        n_min: -5.0,
        n_max: 5.0,
    };
    f(&mut p);
    CandidateTrajectory {
        points: vec![p],
        end_state: EndState {
            s_dot_end: 0.0,
            n_end: 0.0,
        },
        verdict: Verdict::Feasible,
        cost: None,
    }
}

fn boundary_cases(l: &ConstraintLimits) -> Vec<CandidateTrajectory> {
    let up = |x: f64| f64::from_bits(x.to_bits() + 1);
    let l = *l;
    vec![
        single_point(|p| p.v = l.v_max),
        single_point(|p| p.v = up(l.v_max)),
        single_point(|p| p.kappa_path = l.kappa_max),
        single_point(|p| p.kappa_path = -l.kappa_max),
        single_point(|p| p.kappa_path = up(l.kappa_max)),
        single_point(|p| p.n = p.n_max),
        single_point(|p| p.n = p.n_min),
        single_point(|p| p.n = up(p.n_max)),
        single_point(|p| p.a_long = l.ax_eng),
        single_point(|p| p.a_long = up(l.ax_eng)),
        single_point(|p| p.a_long = -l.ax_max),
        single_point(|p| p.a_lat = l.ay_max),
        single_point(|p| p.a_lat = -up(l.ay_max)),
        single_point(|p| p.v = f64::NAN),
    ]
}

fn c3_feasibility() -> Outcome {
    let t0 = Instant::now();
    let cfg = PlannerConfig::default();
    let l = cfg.limits;
    let track = synth_track(
        &SynthKind::Oval {
            straight: 250.0,
            radius: 60.0,
        },
        &SynthParams::default(),
        0,
    )
    .unwrap();
    let mut cands = boundary_cases(&l);
    let n_boundary = cands.len();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    while cands.len() < FEAS_CANDIDATES {
        let st = start(
            rng.gen_range(0.0..track.lap_length()),
            rng.gen_range(0.0..45.0),
            rng.gen_range(-8.0..6.0),
            rng.gen_range(-4.5..4.5),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        cands.extend(generate_candidates(&st, &track, &cfg).unwrap());
    }
    cands.truncate(FEAS_CANDIDATES);
    let mut mismatches = 0;
    let mut feasible = 0;
    for c in &cands {
        let got = check_feasibility(c, &l).is_feasible();
        let want = naive_feasible(c, &l);
        mismatches += (got != want) as usize;
        feasible += want as usize;
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        mismatches == 0 && feasible > 0 && feasible < cands.len() && secs < FEAS_BUDGET_S,
        format!(
            "{mismatches} mismatches over {} candidates ({n_boundary} boundary cases, {feasible} feasible), {secs:.2} s",
            cands.len()
        ),
    )
}

// ---- criterion 4 -------------------------------------------------------

fn c4_argmin() -> Outcome {
    let cfg = PlannerConfig::default();
    let track = synth_track(
        &SynthKind::Oval {
            straight: 250.0,
            radius: 60.0,
        },
        &SynthParams::default(),
        0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sets = [
        WeightSet::NOMINAL_RACING,
        WeightSet::AGGRESSIVE,
        WeightSet::CLOSE_DRIVING,
    ];
    let (mut calls, mut changed, mut raised, mut planned) = (0, 0, 0, 0);
    while calls < ARGMIN_CALLS {
        let s = rng.gen_range(0.0..track.lap_length());
        let r = track.reference(s);
        let st = start(
            s,
            rng.gen_range(0.6..1.0) * r.v_raceline,
            0.0,
            r.n_raceline + rng.gen_range(-2.0..2.0),
            0.0,
            0.0,
        );
        let opp = ObservedVehicle {
            s: s + rng.gen_range(6.0..30.0),
            n: rng.gen_range(-3.0..3.0),
            s_dot: rng.gen_range(0.5..0.95) * st.s_dot,
            mu: 0.0,
            footprint: Default::default(),
        };
        let pred = predict_opponent(&opp, &track, &cfg);
        let w = sets[calls % 3];
        let c = [0.01, 0.5, 3.0, 1e3][calls % 4];
        calls += 1;
        let base = plan(&st, &track, &w, Some(&pred), &cfg);
        let scaled = plan(&st, &track, &w.scaled(c), Some(&pred), &cfg);
        match (&base, &scaled) {
            (Ok(a), Ok(b)) => {
                planned += 1;
                changed += (a.diagnostics.selected_index != b.diagnostics.selected_index) as usize;
            }
            (Err(_), Err(_)) => {}
            _ => changed += 1,
        }
        let hi = WeightSet {
            w_c: w.w_c * 10.0 + 1.0,
            ..w
        };
        if let (Ok(a), Ok(b)) = (&base, plan(&st, &track, &hi, Some(&pred), &cfg)) {
            raised += (b.best.cost.unwrap().c_c > a.best.cost.unwrap().c_c) as usize;
        }
    }
    check(
        changed == 0 && raised == 0 && planned > ARGMIN_CALLS / 2,
        format!("{calls} calls ({planned} feasible): {changed} argmin changes under scaling, {raised} c_c increases when raising w_c"),
    )
}

// ---- criterion 5 -------------------------------------------------------

fn linear_loss(net: &Network, inputs: &[Tensor], coeffs: &[Tensor]) -> f64 {
    let (out, _) = net.forward(inputs).unwrap();
    out.iter()
        .zip(coeffs)
        .map(|(o, c)| o.data.iter().zip(&c.data).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn max_grad_error(spec: NetworkSpec, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::init(spec, &mut rng).unwrap();
    for p in net.params.iter_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    let inputs: Vec<Tensor> = net.input_shapes().iter().map(|s| random_tensor(s, &mut rng)).collect();
    let coeffs: Vec<Tensor> = net.output_shapes().iter().map(|s| random_tensor(s, &mut rng)).collect();
    let (_, cache) = net.forward(&inputs).unwrap();
    let g = net.backward(&cache, &coeffs).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-4);
    let mut worst: f64 = 0.0;
    for i in 0..net.params.len() {
        let orig = net.params[i];
        net.params[i] = orig + GRAD_H;
        let lp = linear_loss(&net, &inputs, &coeffs);
        net.params[i] = orig - GRAD_H;
        let lm = linear_loss(&net, &inputs, &coeffs);
        net.params[i] = orig;
        worst = worst.max(rel(g.params[i], (lp - lm) / (2.0 * GRAD_H)));
    }
    for b in 0..inputs.len() {
        for j in 0..inputs[b].len() {
            let (mut xp, mut xm) = (inputs.clone(), inputs.clone());
            xp[b].data[j] += GRAD_H;
            xm[b].data[j] -= GRAD_H;
            let num = (linear_loss(&net, &xp, &coeffs) - linear_loss(&net, &xm, &coeffs)) / (2.0 * GRAD_H);
            worst = worst.max(rel(g.inputs[b].data[j], num));
        }
    }
    worst
}

fn composite(rng: &mut ChaCha8Rng) -> NetworkSpec {
    let act = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            Activation::Tanh
        } else {
            Activation::Linear
        }
    };
    let (vi, vo) = (rng.gen_range(2..6), rng.gen_range(2..6));
    let (ch, len, k, co) = (
        rng.gen_range(1..4),
        rng.gen_range(6..10),
        rng.gen_range(1..4),
        rng.gen_range(1..4),
    );
    let trunk = rng.gen_range(3..8);
    NetworkSpec {
        branches: vec![
            BranchSpec {
                input_shape: vec![vi],
                layers: vec![LayerSpec::dense(vi, vo, act(rng))],
            },
            BranchSpec {
                input_shape: vec![ch, len],
                layers: vec![LayerSpec::conv1d(ch, co, k, act(rng)), LayerSpec::Flatten],
            },
        ],
        trunk: vec![LayerSpec::dense(vo + co * (len - k + 1), trunk, act(rng))],
        heads: vec![
            HeadSpec {
                layers: vec![LayerSpec::dense(trunk, 3, Activation::Linear)],
                init_scale: 1.0,
            },
            HeadSpec {
                layers: vec![LayerSpec::dense(trunk, 1, Activation::Tanh)],
                init_scale: 1.0,
            },
        ],
    }
}

fn c5_gradients() -> Outcome {
    let t0 = Instant::now();
    let mut specs = vec![
        (
            "dense/linear",
            NetworkSpec::sequential(vec![5], vec![LayerSpec::dense(5, 4, Activation::Linear)]),
        ),
        (
            "dense/tanh",
            NetworkSpec::sequential(vec![5], vec![LayerSpec::dense(5, 4, Activation::Tanh)]),
        ),
        (
            "conv1d",
            NetworkSpec::sequential(vec![3, 9], vec![LayerSpec::conv1d(3, 2, 3, Activation::Tanh)]),
        ),
        (
            "conv1d/stride2",
            NetworkSpec::sequential(
                vec![2, 11],
                vec![LayerSpec::Conv1d {
                    in_channels: 2,
                    out_channels: 3,
                    kernel: 4,
                    stride: 2,
                    activation: Activation::Linear,
                }],
            ),
        ),
        (
            "flatten",
            NetworkSpec::sequential(
                vec![2, 6],
                vec![LayerSpec::Flatten, LayerSpec::dense(12, 2, Activation::Tanh)],
            ),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["composite 1", "composite 2", "composite 3"] {
        specs.push((name, composite(&mut rng)));
    }
    let mut worst = (0.0, "");
    for (i, (name, spec)) in specs.into_iter().enumerate() {
        let e = max_grad_error(spec, 50 + i as u64);
        if e > worst.0 {
            worst = (e, name);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst.0 < GRAD_REL_ERR && secs < GRAD_BUDGET_S,
        format!(
            "max relative error {:.1e} ({}), 8 networks, {secs:.2} s",
            worst.0, worst.1
        ),
    )
}

// ---- criterion 6 -------------------------------------------------------

fn bandit_run() -> (f64, String) {
    let cfg = TrainConfig {
        ppo: PpoConfig {
            n_envs: 4,
            rollout_len: 16,
            minibatch_size: 32,
            total_steps: BANDIT_UPDATES * 64,
            reward_scale: 1.0,
            ..Default::default()
        },
        checkpoint_every: 20,
        seed: 6,
        ..Default::default()
    };
    let out = train(
        &cfg,
        WeightLibrary::default(),
        |_| Ok(BanditEnv::new([0.0, 1.0, 0.0], &cfg.observation)),
        None,
        &mut |_, _| Ok(()),
    )
    .unwrap();
    let obs = BanditEnv::new([0.0; 3], &cfg.observation).observe();
    let p = out.model.policy_forward(&obs).unwrap().dist.probs[Mode::Aggressive.index()];
    let mut curve = String::new();
    for r in &out.curve {
        curve.push_str(&r.csv());
        curve.push('\n');
    }
    (p, curve + &out.checkpoint.to_json().unwrap())
}

fn c6_bandit() -> Outcome {
    let t0 = Instant::now();
    let (p, bytes) = bandit_run();
    let secs = t0.elapsed().as_secs_f64();
    let (p2, bytes2) = bandit_run();
    check(
        p > BANDIT_P_BEST && p == p2 && bytes == bytes2 && secs < BANDIT_BUDGET_S,
        format!(
            "P(best arm) {p:.4} after {BANDIT_UPDATES} updates, repeat identical: {}, {secs:.2} s",
            bytes == bytes2
        ),
    )
}

// ---- criteria 7-9 ------------------------------------------------------

struct RaceTables {
    baseline: String,
    learned: String,
    unseen: String,
}

fn c7_baselines(fx: &Fixture) -> (Outcome, Vec<(Mode, EvalReport)>) {
    let t0 = Instant::now();
    let st = fx.statics(&fx.track, &fx.scenarios);
    let secs = t0.elapsed().as_secs_f64();
    let m = |mode: Mode| st[mode.index()].1.metrics;
    let (nr, ag, cd) = (m(Mode::NominalRacing), m(Mode::Aggressive), m(Mode::CloseDriving));
    let ok = fx.scenarios.len() >= MIN_SCENARIOS
        && nr.collision_pct == 0.0
        && cd.collision_pct >= ag.collision_pct
        && ag.collision_pct >= nr.collision_pct
        && nr.mean_overtake_time_s > ag.mean_overtake_time_s
        && secs < BASELINE_BUDGET_S;
    let detail = format!(
        "{} seeds; collision% NR {:.1} AG {:.1} CD {:.1}; overtake time NR {:.1} s AG {:.1} s CD {:.1} s; {secs:.0} s",
        fx.scenarios.len(),
        nr.collision_pct,
        ag.collision_pct,
        cd.collision_pct,
        nr.mean_overtake_time_s,
        ag.mean_overtake_time_s,
        cd.mean_overtake_time_s
    );
    (check(ok, detail), st)
}

fn c8_learned(
    fx: &Fixture,
    model: &ActorCritic,
    ck: &AgentCheckpoint,
    st: &[(Mode, EvalReport)],
) -> (Outcome, EvalReport) {
    let rl = evaluate(model, fx.track.clone(), &fx.sim, &fx.scenarios).unwrap();
    let (nr, ag) = (st[0].1.metrics, st[1].1.metrics);
    let m = rl.metrics;
    let modes = rl.max_modes_in_overtake();
    let fast = m.mean_overtake_time_s <= TIME_RATIO * nr.mean_overtake_time_s;
    let dominance = m.collision_pct <= ag.collision_pct && m.mean_overtake_time_s <= ag.mean_overtake_time_s;
    let ok = ck.meta.steps <= MAX_TRAIN_STEPS
        && m.collision_pct <= MAX_COLLISION_PCT
        && (fast || dominance)
        && modes >= MIN_MODES;
    let detail = format!(
        "{} train steps; collision {:.1}%; overtake time {:.1} s vs NR {:.1} s (ratio {:.2}, target {TIME_RATIO}), AG {:.1} s{}; max modes in an overtaking episode {modes}; {}",
        ck.meta.steps,
        m.collision_pct,
        m.mean_overtake_time_s,
        nr.mean_overtake_time_s,
        m.mean_overtake_time_s / nr.mean_overtake_time_s,
        ag.mean_overtake_time_s,
        if fast { "" } else if dominance { " (dominance fallback)" } else { " (neither target)" },
        rl.histogram_line()
    );
    (check(ok, detail), rl)
}

fn c9_unseen(fx: &Fixture, model: &ActorCritic) -> (Outcome, EvalReport, EvalReport) {
    let t0 = Instant::now();
    let rl = evaluate(model, fx.unseen.clone(), &fx.sim, &fx.unseen_scenarios).unwrap();
    let nr = evaluate_static(Mode::NominalRacing, fx.unseen.clone(), &fx.sim, &fx.unseen_scenarios).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let ok = rl.metrics.collision_pct <= UNSEEN_MAX_COLLISION_PCT
        && rl.metrics.overtakes_per_lap >= nr.metrics.overtakes_per_lap
        && secs < UNSEEN_BUDGET_S;
    let detail = format!(
        "lap {:.0} m; collision {:.1}%; overtakes/lap {:.3} vs NR {:.3}; {}; {secs:.0} s",
        fx.unseen.lap_length(),
        rl.metrics.collision_pct,
        rl.metrics.overtakes_per_lap,
        nr.metrics.overtakes_per_lap,
        rl.histogram_line()
    );
    (check(ok, detail), rl, nr)
}

fn race_tables(fx: &Fixture, model: &ActorCritic, ck: &AgentCheckpoint) -> (RaceTables, [Outcome; 3]) {
    let (o7, st) = c7_baselines(fx);
    let (o8, rl) = c8_learned(fx, model, ck, &st);
    let (o9, rl_u, nr_u) = c9_unseen(fx, model);
    let baseline = table(&[
        ("static:NR", &st[0].1),
        ("static:AG", &st[1].1),
        ("static:CD", &st[2].1),
    ]);
    let learned = table(&[("learned", &rl)]) + &rl.histogram_line();
    let unseen = table(&[("learned", &rl_u), ("static:NR", &nr_u)]);
    (
        RaceTables {
            baseline,
            learned,
            unseen,
        },
        [o7, o8, o9],
    )
}

// ---- criterion 10 ------------------------------------------------------

fn c10_overhead(fx: &Fixture, ck_path: Option<&Path>) -> Outcome {
    let mut cfg = fx.cfg.clone();
    cfg.out = std::env::temp_dir().join("racecraft-acceptance-timing");
    let t = cmd_timing(&cfg, ck_path).unwrap();
    check(
        t.overhead_ratio < OVERHEAD_RATIO,
        format!(
            "inference {:.4} ms vs planner {:.3} ms over {} cycles: ratio {:.1}% (limit {:.0}%)",
            t.inference_mean_ms,
            t.planner_mean_ms,
            t.n_cycles,
            100.0 * t.overhead_ratio,
            100.0 * OVERHEAD_RATIO
        ),
    )
}

// ---- driver ------------------------------------------------------------

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, name: &str, outcome: Outcome) {
        let (ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!("{} {id:<3} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.lines.push((id.to_string(), ok, detail));
    }
}

fn guarded<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())
    })
}

fn flatten(r: Result<Outcome, String>) -> Outcome {
    r.unwrap_or_else(|e| Err(format!("panic: {e}")))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| args.is_empty() || args.iter().any(|a| a.eq_ignore_ascii_case(id));
    let mut rep = Report { lines: Vec::new() };
    type Check = (&'static str, &'static str, fn() -> Outcome);
    let simple: [Check; 6] = [
        ("c1", "polynomial correctness", c1_polynomials),
        ("c2", "Frenet round trip", c2_round_trip),
        ("c3", "feasibility oracle equivalence", c3_feasibility),
        ("c4", "cost argmin invariance", c4_argmin),
        ("c5", "gradient checks", c5_gradients),
        ("c6", "PPO bandit sanity", c6_bandit),
    ];
    for (id, name, f) in simple {
        if wanted(id) {
            rep.record(id, name, flatten(guarded(f)));
        }
    }

    let race_ids = ["c7", "c8", "c9", "c10", "c11"];
    if race_ids.iter().any(|id| wanted(id)) {
        let fx = Fixture::new();
        let loaded = guarded(|| {
            let (ck, origin) = reference_checkpoint();
            let model = policy_from_checkpoint(&ck).expect("checkpoint matches the architecture");
            (ck, origin, model)
        });
        match loaded {
            Err(e) => {
                for id in race_ids.iter().filter(|id| wanted(id)) {
                    rep.record(id, "race criteria", Err(format!("no checkpoint: {e}")));
                }
            }
            Ok((ck, origin, model)) => {
                println!("     checkpoint: {origin}");
                let needs_tables = ["c7", "c8", "c9", "c11"].iter().any(|id| wanted(id));
                let first = needs_tables.then(|| guarded(|| race_tables(&fx, &model, &ck)));
                match &first {
                    Some(Ok((tables, outcomes))) => {
                        for ((id, name), o) in [
                            ("c7", "static baseline ordering"),
                            ("c8", "adaptive vs static benefit"),
                            ("c9", "generalization to an unseen track"),
                        ]
                        .into_iter()
                        .zip(outcomes.iter().cloned())
                        {
                            if wanted(id) {
                                rep.record(id, name, o);
                            }
                        }
                        for block in [&tables.baseline, &tables.learned, &tables.unseen] {
                            for l in block.lines() {
                                println!("     | {l}");
                            }
                        }
                    }
                    Some(Err(e)) => {
                        for id in ["c7", "c8", "c9"].iter().filter(|id| wanted(id)) {
                            rep.record(id, "race criteria", Err(format!("panic: {e}")));
                        }
                    }
                    None => {}
                }
                if wanted("c10") {
                    let path = reference_checkpoint_path();
                    let ck_path = path.exists().then_some(path.as_path());
                    rep.record(
                        "c10",
                        "inference overhead",
                        flatten(guarded(|| c10_overhead(&fx, ck_path))),
                    );
                }
                if wanted("c11") {
                    let o = flatten(guarded(|| {
                        let (_, b1) = bandit_run();
                        let (_, b2) = bandit_run();
                        let (again, _) = race_tables(&fx, &model, &ck);
                        let Some(Ok((tables, _))) = &first else {
                            return Err("first race run failed".to_string());
                        };
                        let same = [
                            b1 == b2,
                            tables.baseline == again.baseline,
                            tables.learned == again.learned,
                            tables.unseen == again.unseen,
                        ];
                        check(
                            same.iter().all(|s| *s),
                            format!(
                                "byte-identical on repeat: bandit {}, baselines {}, learned {}, unseen {}",
                                same[0], same[1], same[2], same[3]
                            ),
                        )
                    }));
                    rep.record("c11", "determinism", o);
                }
            }
        }
    }

    let failed: Vec<&str> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        rep.lines.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
