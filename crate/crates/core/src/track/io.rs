//! Track CSV reading and writing.
//!
//! Format: optional `#` comment lines, a `# closed=true|false` directive
//! (otherwise closure is inferred from the end-to-start gap), then the
//! header `s,x,y,psi,kappa,n_min,n_max,n_raceline,v_raceline`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ReferenceSample, TrackDefinition, TrackError, MAX_SAMPLE_SPACING};

const HEADER: [&str; 9] = [
    "s",
    "x",
    "y",
    "psi",
    "kappa",
    "n_min",
    "n_max",
    "n_raceline",
    "v_raceline",
];

pub fn load_track(path: impl AsRef<Path>) -> Result<TrackDefinition, TrackError> {
    let text = fs::read_to_string(path)?;
    parse_track(&text)
}

pub fn parse_track(text: &str) -> Result<TrackDefinition, TrackError> {
    let mut closed_directive = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("closed=") {
                closed_directive = match v.trim() {
                    "true" => Some(true),
                    "false" => Some(false),
                    other => {
                        return Err(TrackError::Parse {
                            line: 0,
                            message: format!("bad closed directive '{other}'"),
                        })
                    }
                };
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| TrackError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(TrackError::Parse {
            line: header.position().map_or(1, |p| p.line() as usize),
            message: format!("expected header '{}'", HEADER.join(",")),
        });
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TrackError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 9];
        for (i, field) in record.iter().enumerate() {
            v[i] = field.parse().map_err(|_| TrackError::Parse {
                line,
                message: format!("column '{}': cannot parse '{field}'", HEADER[i]),
            })?;
        }
        samples.push(ReferenceSample {
            s: v[0],
            x: v[1],
            y: v[2],
            psi: v[3],
            kappa: v[4],
            n_min: v[5],
            n_max: v[6],
            n_raceline: v[7],
            v_raceline: v[8],
        });
    }

    let closed = closed_directive.unwrap_or_else(|| infer_closed(&samples));
    TrackDefinition::new(samples, closed)
}

fn infer_closed(samples: &[ReferenceSample]) -> bool {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return false;
    };
    if samples.len() < 3 {
        return false;
    }
    let chord = (first.x - last.x).hypot(first.y - last.y);
    let mean_spacing = last.s / (samples.len() - 1) as f64;
    chord > 0.0 && chord <= (1.5 * mean_spacing).min(MAX_SAMPLE_SPACING)
}

pub fn write_track<W: Write>(track: &TrackDefinition, mut out: W) -> Result<(), TrackError> {
    writeln!(out, "# racecraft track")?;
    writeln!(out, "# closed={}", track.is_closed())?;
    writeln!(out, "{}", HEADER.join(","))?;
    for p in track.samples() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.s, p.x, p.y, p.psi, p.kappa, p.n_min, p.n_max, p.n_raceline, p.v_raceline
        )?;
    }
    Ok(())
}

pub fn save_track(track: &TrackDefinition, path: impl AsRef<Path>) -> Result<(), TrackError> {
    let mut buf = Vec::new();
    write_track(track, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}
