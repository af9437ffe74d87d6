//! Text formats: coefficient CSV, JSON documents and the trace stream.
//!
//! Coefficient CSV is UTF-8 with header `l,m,re,im`, one row per `(l, m)`,
//! degrees ascending and orders `-l..=l`; values use 17 significant digits
//! so they round-trip exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::harmonics::{BandLimit, HarmonicIndex};
use crate::solver::TraceRecord;

/// Write through a temporary sibling file and rename into place.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let file = File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn format_coefficients_csv(coeffs: &CoefficientVector) -> String {
    let mut out = String::with_capacity(coeffs.len() * 56 + 16);
    out.push_str("l,m,re,im\n");
    for (k, z) in coeffs.as_slice().iter().enumerate() {
        let idx = HarmonicIndex::from_flat(k);
        out.push_str(&format!("{},{},{:.16e},{:.16e}\n", idx.l(), idx.m(), z.re, z.im));
    }
    out
}

pub fn write_coefficients_csv(path: &Path, coeffs: &CoefficientVector) -> Result<()> {
    let text = format_coefficients_csv(coeffs);
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

/// Parse coefficient CSV. Rows must be complete and in canonical order.
pub fn parse_coefficients_csv(text: &str, origin: &Path) -> Result<CoefficientVector> {
    read_coefficients(BufReader::new(text.as_bytes()), origin)
}

pub fn read_coefficients_csv(path: &Path) -> Result<CoefficientVector> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_coefficients(BufReader::new(file), path)
}

fn read_coefficients<R: BufRead>(reader: R, origin: &Path) -> Result<CoefficientVector> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line.replace(' ', "") != "l,m,re,im" {
                return Err(err(lineno, format!("expected header `l,m,re,im`, found `{line}`")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let l: usize = fields[0]
            .parse()
            .map_err(|e| err(lineno, format!("bad degree `{}`: {e}", fields[0])))?;
        let m: i64 = fields[1]
            .parse()
            .map_err(|e| err(lineno, format!("bad order `{}`: {e}", fields[1])))?;
        let re: f64 = fields[2]
            .parse()
            .map_err(|e| err(lineno, format!("bad real part `{}`: {e}", fields[2])))?;
        let im: f64 = fields[3]
            .parse()
            .map_err(|e| err(lineno, format!("bad imaginary part `{}`: {e}", fields[3])))?;
        let expected = HarmonicIndex::from_flat(values.len());
        if (l, m) != (expected.l(), expected.m()) {
            return Err(err(
                lineno,
                format!(
                    "expected (l, m) = ({}, {}), found ({l}, {m})",
                    expected.l(),
                    expected.m()
                ),
            ));
        }
        values.push(Complex64::new(re, im));
    }
    if values.is_empty() {
        return Err(err(1, "no coefficient rows".into()));
    }
    let degree = (values.len() as f64).sqrt().round() as usize - 1;
    let band = BandLimit::new(degree);
    if band.dim() != values.len() {
        return Err(err(
            values.len() + 1,
            format!("{} rows do not fill a complete band limit", values.len()),
        ));
    }
    CoefficientVector::from_vec(band, values)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

/// One JSON object per line with keys `k, lambda, mu, eps, phi, g, gplus,
/// inner_iters`.
pub fn write_trace_jsonl(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut text = String::new();
    for rec in trace {
        text.push_str(&serde_json::to_string(rec)?);
        text.push('\n');
    }
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}
