//! Calibration files: CSV with a `#`-commented header.
//!
//! ```text
//! # polcli calibration
//! # format_version = 1
//! # seed = 42
//! # counts = 100000
//! # condition_number = 1.7320508075688774
//! # residual = 0
//! # device: optimal = true
//! # ...
//! matrix,row,c0,c1,c2,c3
//! b,0,...
//! b_inv,0,...
//! sigma_inv,0,...
//! ```

use std::fmt::Write;

use nalgebra::Matrix4;

use crate::calibration::CalibrationResult;
use crate::instrument::{condition_number, InstrumentMatrix};

use super::config::CountMode;
use super::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub result: CalibrationResult,
    pub seed: u64,
    pub counts: CountMode,
    /// Device configuration echo, canonical `key = value` lines.
    pub device: String,
}

pub fn write_calibration(file: &CalibrationFile) -> String {
    let inst = &file.result.instrument;
    let mut out = String::new();
    out.push_str("# polcli calibration\n");
    let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
    let _ = writeln!(out, "# seed = {}", file.seed);
    let _ = writeln!(out, "# counts = {}", file.counts);
    let _ = writeln!(out, "# condition_number = {}", inst.cond);
    let _ = writeln!(out, "# residual = {}", file.result.residual);
    for line in file.device.lines() {
        let _ = writeln!(out, "# device: {line}");
    }
    out.push_str("matrix,row,c0,c1,c2,c3\n");
    for (name, m) in [("b", &inst.b), ("b_inv", &inst.b_inv), ("sigma_inv", &inst.sigma_inv)] {
        for r in 0..4 {
            let _ = writeln!(
                out,
                "{name},{r},{},{},{},{}",
                m[(r, 0)],
                m[(r, 1)],
                m[(r, 2)],
                m[(r, 3)]
            );
        }
    }
    out
}

/// Parses a calibration file. The stored inverse is used as-is; the
/// condition number is taken from the header when present.
pub fn read_calibration(text: &str) -> Result<CalibrationResult, CliError> {
    let bad = |msg: String| CliError::config(format!("malformed calibration file: {msg}"));
    let mut b = None;
    let mut b_inv = None;
    let mut sigma_inv = None;
    let mut rows_seen = [[false; 4]; 3];
    let mut cond = None;
    let mut residual = 0.0;
    let mut header_seen = false;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                match k.trim() {
                    "condition_number" => {
                        cond = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?)
                    }
                    "residual" => residual = v.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                    "format_version" => {
                        let ver: u32 = v.trim().parse().map_err(|_| bad(format!("version `{}`", v.trim())))?;
                        if ver != FORMAT_VERSION {
                            return Err(bad(format!("unsupported format version {ver}")));
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.starts_with("matrix,") {
            header_seen = true;
            continue;
        }
        let fields: Vec<_> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields in `{line}`")));
        }
        let (slot, idx) = match fields[0] {
            "b" => (&mut b, 0),
            "b_inv" => (&mut b_inv, 1),
            "sigma_inv" => (&mut sigma_inv, 2),
            other => return Err(bad(format!("unknown matrix `{other}`"))),
        };
        let row: usize = fields[1]
            .parse()
            .ok()
            .filter(|&r| r < 4)
            .ok_or_else(|| bad(format!("bad row index `{}`", fields[1])))?;
        let m: &mut Matrix4<f64> = slot.get_or_insert_with(Matrix4::zeros);
        for c in 0..4 {
            let v: f64 = fields[c + 2]
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", fields[c + 2])))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite entry `{}`", fields[c + 2])));
            }
            m[(row, c)] = v;
        }
        rows_seen[idx][row] = true;
    }

    if !header_seen {
        return Err(bad("missing `matrix,row,...` header".into()));
    }
    if rows_seen.iter().flatten().any(|seen| !seen) {
        return Err(bad("b, b_inv and sigma_inv need all four rows".into()));
    }
    let (b, b_inv, sigma_inv) = (b.unwrap(), b_inv.unwrap(), sigma_inv.unwrap());
    let cond = cond.unwrap_or_else(|| condition_number(&b));
    Ok(CalibrationResult {
        instrument: InstrumentMatrix { b, b_inv, cond, sigma_inv },
        residual,
    })
}
