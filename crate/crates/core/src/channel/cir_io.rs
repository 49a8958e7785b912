//! CIR text format.
//!
//! ```text
//! dt=<seconds>
//! t0=<seconds>        (optional)
//! <sample>
//! <sample>
//! ...
//! ```
//!
//! Sample lines may also carry an explicit time as `<time>,<sample>`; those
//! times must follow the uniform `t0 + n·dt` grid. LF or CRLF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::signal::SampledSignal;

/// Relative deviation from the grid tolerated in explicit time columns.
const TIME_GRID_RTOL: f64 = 1e-6;

pub fn load_cir(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cir(&text, path)
}

/// Parses CIR text; `origin` only labels errors.
pub fn parse_cir(text: &str, origin: &Path) -> Result<SampledSignal> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).trim())
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file, expected `dt=<seconds>`".into()))?;
    let dt = header
        .strip_prefix("dt=")
        .ok_or_else(|| {
            err(
                line_no,
                format!("expected `dt=<seconds>`, found `{header}`"),
            )
        })
        .and_then(|v| parse_number(v).map_err(|m| err(line_no, m)))?;
    if !(dt > 0.0) {
        return Err(err(line_no, format!("dt must be positive, got {dt}")));
    }

    let mut t0 = 0.0;
    let mut samples = Vec::new();
    let mut pending = lines.peekable();
    if let Some(&(line_no, l)) = pending.peek() {
        if let Some(v) = l.strip_prefix("t0=") {
            t0 = parse_number(v).map_err(|m| err(line_no, m))?;
            pending.next();
        }
    }
    let start = t0 / dt;
    let start_offset = start.round();
    if (start - start_offset).abs() > TIME_GRID_RTOL * start.abs().max(1.0) {
        return Err(err(2, format!("t0={t0} is not a multiple of dt={dt}")));
    }

    for (line_no, l) in pending {
        let value = match l.split_once(',') {
            Some((t, v)) => {
                let t = parse_number(t.trim()).map_err(|m| err(line_no, m))?;
                let expected = t0 + samples.len() as f64 * dt;
                if (t - expected).abs() > TIME_GRID_RTOL * dt {
                    return Err(err(
                        line_no,
                        format!("non-uniform spacing: time {t} but grid expects {expected}"),
                    ));
                }
                v.trim()
            }
            None => l,
        };
        let v = parse_number(value).map_err(|m| err(line_no, m))?;
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(err(1, "no samples".into()));
    }
    Ok(SampledSignal::from_real(&samples, dt)?.with_start_offset(start_offset as i64))
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

/// Formats a real CIR; numbers carry 17 significant digits so a reload is
/// bit-identical.
pub fn format_cir(signal: &SampledSignal) -> Result<String> {
    if signal.max_abs_imag() != 0.0 {
        return Err(invalid("only real CIRs can be stored"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "dt={}", fmt_f64(signal.sample_interval()));
    if signal.start_offset() != 0 {
        let _ = writeln!(out, "t0={}", fmt_f64(signal.time_of(signal.start_offset())));
    }
    for s in signal.samples() {
        let _ = writeln!(out, "{}", fmt_f64(s.re));
    }
    Ok(out)
}

pub fn store_cir(signal: &SampledSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_cir(signal)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
