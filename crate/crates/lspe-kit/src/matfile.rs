//! The matrix file format, plus measurement vectors and estimate sidecars.
//!
//! A matrix file is UTF-8 text. Line 1 is the header `M N FIELD` with
//! `FIELD ∈ {R, C}`; then `M` lines of `N` whitespace-separated entries.
//! Real entries are plain decimals; complex entries are written `re:im`
//! (for example `1.5:-0.25`). Writing uses Rust's shortest-round-trip float
//! display, so write → read reproduces every entry bit for bit.
//!
//! A measurement file is one decimal per line (blank lines and `#` comments
//! allowed). An estimate sidecar is the `key = value` summary written next
//! to an estimated signal.

use std::fmt::Write as _;
use std::path::Path;

use lspe_core::{FieldTag, Mat};
use num_complex::Complex64;

use crate::error::{KitError, Result};

/// Render `m` in the matrix file format.
pub fn render_matrix(m: &Mat) -> String {
    let mut out = String::new();
    let field = match m.field() {
        FieldTag::Real => "R",
        FieldTag::Complex => "C",
    };
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), field);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(' ');
            }
            let e = m.get(i, j);
            match m.field() {
                FieldTag::Real => {
                    let _ = write!(out, "{}", e.re);
                }
                FieldTag::Complex => {
                    let _ = write!(out, "{}:{}", e.re, e.im);
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Write `m` to `path` in the matrix file format.
pub fn write_matrix(path: &Path, m: &Mat) -> Result<()> {
    std::fs::write(path, render_matrix(m)).map_err(|e| KitError::io(path, e))
}

fn parse_f64(path: &Path, line: usize, tok: &str, what: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| KitError::parse(path, line, format!("`{tok}` is not {what}")))
}

/// Parse matrix-file `text`; `path` labels diagnostics only.
pub fn parse_matrix(path: &Path, text: &str) -> Result<Mat> {
    let mut lines = text.lines().enumerate();
    let (hdr_idx, hdr) = lines
        .next()
        .ok_or_else(|| KitError::parse(path, 1, "empty file (expected `M N FIELD` header)"))?;
    let parts: Vec<&str> = hdr.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(KitError::parse(
            path,
            hdr_idx + 1,
            format!("header must be `M N FIELD`, got `{hdr}`"),
        ));
    }
    let rows: usize = parts[0]
        .parse()
        .map_err(|_| KitError::parse(path, 1, format!("`{}` is not a row count", parts[0])))?;
    let cols: usize = parts[1]
        .parse()
        .map_err(|_| KitError::parse(path, 1, format!("`{}` is not a column count", parts[1])))?;
    let field = match parts[2] {
        "R" => FieldTag::Real,
        "C" => FieldTag::Complex,
        other => {
            return Err(KitError::parse(
                path,
                1,
                format!("FIELD must be `R` or `C`, got `{other}`"),
            ))
        }
    };
    if rows == 0 || cols == 0 {
        return Err(KitError::parse(path, 1, "matrix dimensions must be >= 1"));
    }

    let mut vals: Vec<Complex64> = Vec::with_capacity(rows * cols);
    let mut filled = 0usize;
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if filled == rows {
            return Err(KitError::parse(
                path,
                lineno,
                format!("more than {rows} data rows"),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(KitError::parse(
                path,
                lineno,
                format!("row {} has {} entries, expected {cols}", filled + 1, toks.len()),
            ));
        }
        for tok in toks {
            match field {
                FieldTag::Real => {
                    if tok.contains(':') {
                        return Err(KitError::parse(
                            path,
                            lineno,
                            format!("complex entry `{tok}` in an R-field file"),
                        ));
                    }
                    let re = parse_f64(path, lineno, tok, "a real entry")?;
                    vals.push(Complex64::new(re, 0.0));
                }
                FieldTag::Complex => {
                    let Some((rs, is)) = tok.split_once(':') else {
                        return Err(KitError::parse(
                            path,
                            lineno,
                            format!("entry `{tok}` must be `re:im` in a C-field file"),
                        ));
                    };
                    let re = parse_f64(path, lineno, rs, "a real part")?;
                    let im = parse_f64(path, lineno, is, "an imaginary part")?;
                    vals.push(Complex64::new(re, im));
                }
            }
        }
        filled += 1;
    }
    if filled != rows {
        return Err(KitError::parse(
            path,
            0,
            format!("file has {filled} data rows, header promised {rows}"),
        ));
    }
    match field {
        FieldTag::Real => {
            let reals: Vec<f64> = vals.iter().map(|z| z.re).collect();
            Mat::from_real(rows, cols, &reals).map_err(KitError::Numerical)
        }
        FieldTag::Complex => Mat::from_complex(rows, cols, &vals).map_err(KitError::Numerical),
    }
}

/// Read a matrix file from disk.
pub fn read_matrix(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path).map_err(|e| KitError::io(path, e))?;
    parse_matrix(path, &text)
}

/// Read a measurement file: one decimal per line.
pub fn read_measurements(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| KitError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_f64(path, idx + 1, line, "a measurement value")?);
    }
    if out.is_empty() {
        return Err(KitError::parse(path, 0, "no measurements in file"));
    }
    Ok(out)
}

/// The summary written next to an estimated signal.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateMeta {
    pub lambda1: f64,
    pub converged: bool,
    pub iters: usize,
    pub smse_analytic: f64,
}

/// Render the sidecar in the same `key = value` shape the configs use.
pub fn render_meta(meta: &EstimateMeta) -> String {
    format!(
        "lambda1 = {}\nconverged = {}\niters = {}\nsmse_analytic = {}\n",
        meta.lambda1, meta.converged, meta.iters, meta.smse_analytic
    )
}
