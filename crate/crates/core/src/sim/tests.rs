use super::*;
use crate::track::{synth_track, SynthKind, SynthParams};

fn oval() -> Arc<TrackDefinition> {
    oval_with(250.0)
}

fn oval_with(straight: f64) -> Arc<TrackDefinition> {
    Arc::new(synth_track(&SynthKind::Oval { straight, radius: 60.0 }, &SynthParams::default(), 0).unwrap())
}

fn nr(_: &RaceEnv) -> Mode {
    Mode::NominalRacing
}

#[test]
fn reset_places_vehicles_on_raceline() {
    let track = oval();
    let env = RaceEnv::new(track.clone(), SimConfig::default(), ScenarioConfig::default()).unwrap();
    assert_eq!(env.opponent().s - env.ego().s, 60.0);
    assert_eq!(env.ego().n, track.reference(0.0).n_raceline);
    assert_eq!(env.ego().v, track.reference(0.0).v_raceline);
    let again = RaceEnv::new(track, SimConfig::default(), ScenarioConfig::default()).unwrap();
    assert_eq!(env.ego(), again.ego());
    assert_eq!(env.opponent(), again.opponent());
}

#[test]
fn opponent_behind_is_rejected() {
    let sc = ScenarioConfig {
        ego_start_s: 50.0,
        opp_start_s: 10.0,
        ..Default::default()
    };
    assert!(matches!(
        RaceEnv::new(oval(), SimConfig::default(), sc),
        Err(SimError::InvalidScenario(_))
    ));
}

#[test]
fn lone_ego_advances_at_raceline_speed() {
    let samples = (0..=1000)
        .map(|i| crate::track::ReferenceSample {
            s: 2.0 * i as f64,
            x: 2.0 * i as f64,
            y: 0.0,
            psi: 0.0,
            kappa: 0.0,
            n_min: -6.0,
            n_max: 6.0,
            n_raceline: 0.0,
            v_raceline: 40.0,
        })
        .collect();
    let track = Arc::new(TrackDefinition::new(samples, false).unwrap());
    // opponent far out of reach
    let sc = ScenarioConfig {
        ego_start_s: 100.0,
        opp_start_s: 900.0,
        opponent_kind: OpponentKind::NonReactive,
        ..Default::default()
    };
    let mut env = RaceEnv::new(track.clone(), SimConfig::default(), sc).unwrap();
    let v = env.ego().v;
    let s0 = env.ego().s;
    let rec = env.step(Mode::NominalRacing).unwrap();
    assert!(
        (rec.ego.s - s0 - v * 0.35).abs() < 1e-6,
        "{} vs {}",
        rec.ego.s - s0,
        v * 0.35
    );
    assert!((env.time() - 0.35).abs() < 1e-15);
}

#[test]
fn impossible_limits_end_with_no_feasible() {
    let mut cfg = SimConfig::default();
    cfg.planner.limits.v_max = 1.0;
    let mut env = RaceEnv::new(oval(), cfg, ScenarioConfig::default()).unwrap();
    let rec = env.step(Mode::NominalRacing).unwrap();
    assert_eq!(rec.outcome, Some(Outcome::NoFeasible));
    assert_eq!(rec.breakdown.sparse, -100.0);
    assert!(matches!(env.step(Mode::NominalRacing), Err(SimError::EpisodeDone)));
}

#[test]
fn timeout_without_overtake() {
    let sc = ScenarioConfig {
        max_steps: 3,
        ..Default::default()
    };
    let res = run_scenario(oval(), &SimConfig::default(), &sc, &mut nr).unwrap();
    assert_eq!(res.outcome, Outcome::Timeout);
    assert_eq!(res.steps, 3);
    assert_eq!(res.mode_counts, [3, 0, 0]);
}

#[test]
fn non_reactive_opponent_stays_on_raceline() {
    let track = oval();
    let sc = ScenarioConfig {
        opponent_kind: OpponentKind::NonReactive,
        max_steps: 10,
        ..Default::default()
    };
    let mut env = RaceEnv::new(track.clone(), SimConfig::default(), sc).unwrap();
    while !env.is_done() {
        env.step(Mode::NominalRacing).unwrap();
        let o = env.opponent();
        assert_eq!(o.n, track.reference(o.s).n_raceline);
    }
}

#[test]
fn collision_primitives() {
    let track = oval();
    let fp = Footprint::default();
    let a = VehicleState::on_raceline(&track, 10.0, 20.0, fp);
    assert!(detect_collision(&a, &a.clone()));
    let mut b = a.clone();
    b.y += 5.0;
    assert!(!detect_collision(&a, &b));
    let zone = InteractionZone {
        long_ahead: 20.0,
        long_behind: 10.0,
        lateral_halfwidth: 6.0,
    };
    let far = VehicleState::on_raceline(&track, 210.0, 20.0, fp);
    assert!(!in_interaction_zone(&a, &far, &zone));
    assert!(in_interaction_zone(
        &a,
        &VehicleState::on_raceline(&track, 15.0, 20.0, fp),
        &zone
    ));
}

#[test]
fn rear_end_contact_terminates() {
    // a stationary opponent straight ahead, ego forced to keep speed
    let track = oval();
    let mut cfg = SimConfig::default();
    cfg.planner.lat_range = Some([0.0, 0.0]);
    cfg.planner.speed_range = [1.0, 1.0];
    cfg.planner.n_lat_samples = 1;
    cfg.planner.n_speed_samples = 1;
    let sc = ScenarioConfig {
        ego_start_s: 20.0,
        opp_start_s: 40.0,
        ..Default::default()
    };
    let mut env = RaceEnv::new(track.clone(), cfg, sc).unwrap();
    env.opp = VehicleState::on_raceline(&track, 40.0, 0.0, Footprint::default());
    env.scenario.opponent_kind = OpponentKind::NonReactive;
    env.opp_speed_scale = 0.0;
    let mut steps = 0;
    let last = loop {
        let r = env.step(Mode::NominalRacing).unwrap();
        steps += 1;
        if r.done {
            break r;
        }
    };
    assert_eq!(last.outcome, Some(Outcome::Collision));
    assert!(steps <= 4);
}

#[test]
fn episode_is_deterministic() {
    let sc = ScenarioConfig {
        max_steps: 40,
        ..Default::default()
    };
    let a = run_scenario(oval(), &SimConfig::default(), &sc, &mut nr).unwrap();
    let b = run_scenario(oval(), &SimConfig::default(), &sc, &mut nr).unwrap();
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    a.write_jsonl(&mut la).unwrap();
    b.write_jsonl(&mut lb).unwrap();
    assert_eq!(la, lb);
    assert!((a.records.last().unwrap().t - a.steps as f64 * 0.35).abs() < 1e-12);
}

#[test]
fn flying_lap_completes_and_repeats() {
    let t = oval();
    let cfg = SimConfig::default();
    let a = run_lap(&t, &cfg, Mode::NominalRacing, 0.0, 400).unwrap();
    assert_eq!(a.outcome, Outcome::Success);
    let time = a.lap_time.unwrap();
    // bounded by the fastest and slowest raceline speeds
    assert!(time > t.lap_length() / 45.0 && time < t.lap_length() / 10.0, "{time}");
    assert!(time <= a.steps as f64 * 0.35 && time > (a.steps - 1) as f64 * 0.35);
    let b = run_lap(&t, &cfg, Mode::NominalRacing, 0.0, 400).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn zero_speed_limit_fails_the_lap() {
    let t = oval();
    let mut cfg = SimConfig::default();
    cfg.planner.limits.v_max = 0.0;
    let r = run_lap(&t, &cfg, Mode::NominalRacing, 0.0, 400).unwrap();
    assert_eq!(r.outcome, Outcome::NoFeasible);
    assert!(r.lap_time.is_none());
}
