//! Bit-stable text file formats: samples CSV, Wigner grid CSV, density
//! diagonals, parameter and report key=value files. Floats print in
//! Rust's shortest round-trip form, so write-then-read reproduces values
//! exactly; line endings are LF.

use focktomo::model::Conditioning;
use focktomo::sim::QuadratureRecord;
use focktomo::tomography::WignerGrid;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub fn channel_name(c: Conditioning) -> &'static str {
    match c {
        Conditioning::None => "n0",
        Conditioning::Single => "n1",
        Conditioning::Coincidence => "n2",
    }
}

pub fn channel_from_name(s: &str) -> Option<Conditioning> {
    match s {
        "n0" => Some(Conditioning::None),
        "n1" => Some(Conditioning::Single),
        "n2" => Some(Conditioning::Coincidence),
        _ => None,
    }
}

#[derive(Debug)]
pub struct FormatError {
    pub message: String,
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for FormatError {}

fn fail<T>(message: String) -> Result<T, FormatError> {
    Err(FormatError { message })
}

pub fn write_samples(path: &Path, records: &[QuadratureRecord]) -> io::Result<()> {
    let mut text = String::with_capacity(records.len() * 24 + 16);
    text.push_str("channel,theta,x\n");
    for r in records {
        let _ = writeln!(text, "{},{},{}", channel_name(r.channel), r.theta, r.x);
    }
    std::fs::write(path, text)
}

pub fn read_samples(path: &Path) -> Result<Vec<QuadratureRecord>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "channel,theta,x")) => {}
        _ => return fail(format!("{}: missing samples header", path.display())),
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |field: Option<&str>, what: &str| -> Result<f64, FormatError> {
            field
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FormatError {
                    message: format!("{}:{}: malformed {what}", path.display(), lineno + 1),
                })
        };
        let channel = parts
            .next()
            .and_then(channel_from_name)
            .ok_or_else(|| FormatError {
                message: format!("{}:{}: malformed channel", path.display(), lineno + 1),
            })?;
        let theta = parse(parts.next(), "theta")?;
        let x = parse(parts.next(), "x")?;
        if parts.next().is_some() {
            return fail(format!(
                "{}:{}: too many fields",
                path.display(),
                lineno + 1
            ));
        }
        records.push(QuadratureRecord { theta, x, channel });
    }
    Ok(records)
}

pub fn write_grid(path: &Path, grid: &WignerGrid) -> io::Result<()> {
    let mut text = String::with_capacity(grid.values.len() * 24 + 16);
    text.push_str("x,p,w\n");
    for (i, &x) in grid.xs.iter().enumerate() {
        for (j, &p) in grid.ps.iter().enumerate() {
            let _ = writeln!(text, "{},{},{}", x, p, grid.at(i, j));
        }
    }
    std::fs::write(path, text)
}

pub fn read_grid(path: &Path) -> Result<WignerGrid, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,p,w")) => {}
        _ => return fail(format!("{}: missing grid header", path.display())),
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    let mut triples: Vec<(f64, f64, f64)> = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |what: &str| -> Result<f64, FormatError> {
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FormatError {
                    message: format!("{}:{}: malformed {what}", path.display(), lineno + 1),
                })
        };
        let x = next("x")?;
        let p = next("p")?;
        let w = next("w")?;
        if xs.last() != Some(&x) {
            xs.push(x);
        }
        if xs.len() == 1 {
            ps.push(p);
        }
        triples.push((x, p, w));
    }
    let n = xs.len();
    let m = ps.len();
    if n < 4 || m < 4 || triples.len() != n * m {
        return fail(format!("{}: grid is not rectangular", path.display()));
    }
    let values = triples.iter().map(|t| t.2).collect();
    Ok(WignerGrid::new(xs, ps, values))
}

pub fn write_key_values(path: &Path, pairs: &[(String, String)]) -> io::Result<()> {
    let mut sorted: Vec<&(String, String)> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut text = String::new();
    for (k, v) in sorted {
        let _ = writeln!(text, "{k}={v}");
    }
    std::fs::write(path, text)
}

pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| FormatError {
            message: format!("{}:{}: expected key=value", path.display(), lineno + 1),
        })?;
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn write_density(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut text = String::from("n,value\n");
    for (n, v) in values.iter().enumerate() {
        let _ = writeln!(text, "{n},{v}");
    }
    std::fs::write(path, text)
}

pub fn read_density(path: &Path) -> Result<Vec<f64>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "n,value")) => {}
        _ => return fail(format!("{}: missing density header", path.display())),
    }
    let mut values = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v = line
            .split_once(',')
            .and_then(|(n, v)| {
                (n.parse::<usize>().ok() == Some(values.len())).then(|| v.parse::<f64>().ok())
            })
            .flatten()
            .ok_or_else(|| FormatError {
                message: format!("{}:{}: malformed density row", path.display(), lineno + 1),
            })?;
        values.push(v);
    }
    Ok(values)
}
