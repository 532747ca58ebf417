use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use racecraft::bench::{gap_series, gap_zero_crossings, load_episodes, PANELS};
use racecraft::track::load_track;

fn racecraft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_racecraft"))
        .current_dir(dir)
        .args(args)
        .env_remove("RACECRAFT_CONFIG")
        .env_remove("RACECRAFT_SEED")
        .env_remove("RACECRAFT_OUT")
        .env_remove("RACECRAFT_SET")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

const SMALL_RACE: &[&str] = &["--set", "scenarios.max_steps=120", "--count", "4"];

#[test]
fn track_writes_reloadable_reproducible_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let args = ["track", "oval", "--straight", "200", "--radius", "50", "--width", "12"];
    let a = racecraft(d, &[&args[..], &["--out", "a.csv"]].concat());
    assert!(a.status.success(), "{}", text(&a));
    let b = racecraft(d, &[&args[..], &["--out", "b.csv"]].concat());
    assert!(b.status.success());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    let t = load_track(d.join("a.csv")).unwrap();
    assert!((t.lap_length() - (400.0 + 2.0 * std::f64::consts::PI * 50.0)).abs() < 1.0);

    let bad = racecraft(d, &["track", "oval", "--radius=4", "--width", "12", "--out", "c.csv"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad).contains("half width"), "{}", text(&bad));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(racecraft(tmp.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(
        racecraft(tmp.path(), &["race", "--set", "bogus.key=1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        racecraft(tmp.path(), &["race", "--policy", "static:XX"]).status.code(),
        Some(1)
    );
    assert_eq!(racecraft(tmp.path(), &["race", "--count", "0"]).status.code(), Some(1));
    assert_eq!(
        racecraft(tmp.path(), &["timing", "--cycles", "1"]).status.code(),
        Some(1)
    );
    assert!(racecraft(tmp.path(), &["--help"]).status.success());
}

#[test]
fn lap_is_repeatable_and_zero_speed_cap_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let a = racecraft(d, &["lap", "--out", "a"]);
    let b = racecraft(d, &["lap", "--out", "b"]);
    assert!(a.status.success(), "{}", text(&a));
    assert_eq!(a.stdout, b.stdout);
    for m in ["NR", "CD"] {
        assert!(text(&a).contains(&format!("{m}: lap time")));
        let csv = fs::read_to_string(d.join("a").join(format!("lap_{m}.csv"))).unwrap();
        assert!(csv.starts_with("t,s,n,v,a_long,a_lat,x,y,feasible,cost_total\n"));
    }

    let z = racecraft(
        d,
        &["lap", "--mode", "NR", "--set", "planner.limits.v_max=0", "--out", "z"],
    );
    assert_eq!(z.status.code(), Some(2));
    assert!(text(&z).contains("NoFeasible"), "{}", text(&z));
}

#[test]
fn env_vars_feed_common_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_racecraft"))
        .current_dir(tmp.path())
        .args(["track", "oval"])
        .env("RACECRAFT_OUT", "via_env.csv")
        .env("RACECRAFT_SET", "track.params.width=11")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    assert!(tmp.path().join("via_env.csv").exists());
}

#[test]
fn race_bundle_reports_and_replays_from_echoed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let r = racecraft(
        d,
        &[&["race", "--policy", "static:AG", "--out", "b1"][..], SMALL_RACE].concat(),
    );
    assert!(r.status.success(), "{}", text(&r));
    for f in [
        "config.toml",
        "track.csv",
        "scenarios.json",
        "metrics.csv",
        "metrics.txt",
        "summary.json",
    ] {
        assert!(d.join("b1").join(f).exists(), "{f}");
    }

    // the echoed configuration reproduces the table
    let again = racecraft(
        d,
        &[
            "race",
            "--policy",
            "static:AG",
            "--config",
            "b1/config.toml",
            "--out",
            "b2",
        ],
    );
    assert!(again.status.success(), "{}", text(&again));
    assert_eq!(
        fs::read(d.join("b1/metrics.csv")).unwrap(),
        fs::read(d.join("b2/metrics.csv")).unwrap()
    );

    let rep = racecraft(d, &["report", "b1"]);
    assert!(rep.status.success(), "{}", text(&rep));
    assert!(!text(&rep).contains("differ"));
    assert_eq!(
        fs::read(d.join("b1/metrics.csv")).unwrap(),
        fs::read(d.join("b1/report/metrics.csv")).unwrap()
    );
    let logs = load_episodes(&d.join("b1")).unwrap();
    let svgs: Vec<_> = fs::read_dir(d.join("b1/report"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("seed_"))
        .collect();
    assert_eq!(svgs.len() % PANELS.len(), 0);
    assert!(!svgs.is_empty());
    assert!(d.join("b1/report/paths.svg").exists());

    for log in &logs {
        let last = log.records.last().unwrap();
        if last.outcome == Some(racecraft::sim::Outcome::Success) {
            assert_eq!(
                gap_zero_crossings(&gap_series(&log.records)),
                last.overtakes,
                "seed {}",
                log.scenario.seed
            );
        }
    }

    fs::create_dir(d.join("empty")).unwrap();
    let e = racecraft(d, &["report", "empty"]);
    assert_eq!(e.status.code(), Some(1));
    assert!(text(&e).contains("no episode logs"));
}

#[test]
fn timing_reports_both_means_and_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let o = racecraft(tmp.path(), &["timing", "--cycles", "100", "--out", "t"]);
    assert!(o.status.success(), "{}", text(&o));
    let s = text(&o);
    assert!(s.contains("planner mean") && s.contains("inference mean") && s.contains("overhead ratio"));
    assert!(tmp.path().join("t/timing.json").exists());
}

#[test]
fn train_smoke_and_resume_match_unbroken_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let common = [
        "--set",
        "train.ppo.n_envs=2,train.ppo.rollout_len=32,train.ppo.minibatch_size=32,train.checkpoint_every=2",
        "--set",
        "scenarios.max_steps=40,train_extras.snapshot_episodes=1,train_extras.episode_steps=40",
        "--seed",
        "4",
    ];
    let full = racecraft(
        d,
        &[&["train", "--steps", "256", "--out", "full"][..], &common].concat(),
    );
    assert!(full.status.success(), "{}", text(&full));
    let half = racecraft(
        d,
        &[&["train", "--steps", "128", "--out", "part"][..], &common].concat(),
    );
    assert!(half.status.success(), "{}", text(&half));
    let rest = racecraft(
        d,
        &[
            &[
                "train",
                "--steps",
                "256",
                "--out",
                "part",
                "--resume",
                "part/checkpoint.json",
            ][..],
            &common,
        ]
        .concat(),
    );
    assert!(rest.status.success(), "{}", text(&rest));
    for f in ["curve.csv", "checkpoint.json", "snapshots.csv"] {
        assert_eq!(
            fs::read_to_string(d.join("full").join(f)).unwrap(),
            fs::read_to_string(d.join("part").join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(d.join("full/checkpoints/update_00004.json").exists());

    // the checkpoint drives a race
    let r = racecraft(
        d,
        &[
            &["race", "--policy", "full/checkpoint.json", "--out", "rl"][..],
            SMALL_RACE,
        ]
        .concat(),
    );
    assert!(r.status.success(), "{}", text(&r));
}
