//! Builds the three synthetic track families, checks Frenet round trips and
//! writes each track as CSV.
//!
//! cargo run --example track_tour -- /tmp/tracks

use racecraft::track::{save_track, synth_track, SynthKind, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "tracks".into());
    std::fs::create_dir_all(&dir)?;
    let kinds = [
        (
            "oval",
            SynthKind::Oval {
                straight: 250.0,
                radius: 60.0,
            },
        ),
        (
            "chicane",
            SynthKind::Chicane {
                straight: 300.0,
                radius: 60.0,
                chicane_radius: 40.0,
                chicane_angle_deg: 30.0,
            },
        ),
        (
            "random_loop",
            SynthKind::RandomLoop {
                mean_radius: 150.0,
                harmonics: 4,
                roughness: 0.25,
            },
        ),
    ];
    for (name, kind) in kinds {
        let track = synth_track(&kind, &SynthParams::default(), 1)?;
        let lap = track.lap_length();
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let s = lap * i as f64 / 200.0;
            let r = track.reference(s);
            let n = 0.8 * r.n_max;
            let c = track.frenet_to_cartesian(s, n)?;
            let f = track.cartesian_to_frenet(c.x, c.y, None, None)?;
            worst = worst.max((track.signed_gap(s, f.s)).abs()).max((f.n - n).abs());
        }
        let v_min = track
            .samples()
            .iter()
            .map(|p| p.v_raceline)
            .fold(f64::INFINITY, f64::min);
        let path = format!("{dir}/{name}.csv");
        save_track(&track, &path)?;
        println!("{name:<12} lap {lap:7.1} m  slowest raceline {v_min:5.1} m/s  round trip {worst:.1e} m  -> {path}");
    }
    Ok(())
}
