//! Flat `key = value` device configuration and sweep settings.
//!
//! ```text
//! # comments run to end of line
//! optimal = true              # fills x_sq with the tetrahedron ratio
//! analyzer_t_theta_deg = 45
//! analyzer_t_phi_deg = 0
//! analyzer_r_theta_deg = 45
//! analyzer_r_phi_deg = 90
//! phase_t_deg = 0
//! phase_r_deg = 0
//! efficiencies = 1, 1, 1, 1
//! dark_rates = 0, 0, 0, 0
//! ```
//!
//! Angles are in degrees here and converted to radians for the model.

use std::fmt;
use std::str::FromStr;

use crate::design::optimal_splitting_ratio;
use crate::instrument::PolarimeterModel;
use crate::optics::{AnalyzerSpec, PpbsSpec};

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub optimal: bool,
    pub x_sq: f64,
    pub analyzer_t_deg: (f64, f64),
    pub analyzer_r_deg: (f64, f64),
    pub phase_t_deg: f64,
    pub phase_r_deg: f64,
    pub efficiencies: [f64; 4],
    pub dark_rates: [f64; 4],
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            optimal: true,
            x_sq: optimal_splitting_ratio().0,
            analyzer_t_deg: (45.0, 0.0),
            analyzer_r_deg: (45.0, 90.0),
            phase_t_deg: 0.0,
            phase_r_deg: 0.0,
            efficiencies: [1.0; 4],
            dark_rates: [0.0; 4],
        }
    }
}

impl DeviceConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut optimal = None;
        let mut x_sq = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "optimal" => optimal = Some(parse_bool(value).map_err(err)?),
                "x_sq" => x_sq = Some(parse_num(value).map_err(err)?),
                "analyzer_t_theta_deg" => cfg.analyzer_t_deg.0 = parse_num(value).map_err(err)?,
                "analyzer_t_phi_deg" => cfg.analyzer_t_deg.1 = parse_num(value).map_err(err)?,
                "analyzer_r_theta_deg" => cfg.analyzer_r_deg.0 = parse_num(value).map_err(err)?,
                "analyzer_r_phi_deg" => cfg.analyzer_r_deg.1 = parse_num(value).map_err(err)?,
                "phase_t_deg" => cfg.phase_t_deg = parse_num(value).map_err(err)?,
                "phase_r_deg" => cfg.phase_r_deg = parse_num(value).map_err(err)?,
                "efficiencies" => cfg.efficiencies = parse_four(value).map_err(err)?,
                "dark_rates" => cfg.dark_rates = parse_four(value).map_err(err)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        match (optimal, x_sq) {
            (Some(true), Some(_)) => {
                return Err(CliError::config("`x_sq` conflicts with `optimal = true`"))
            }
            (Some(true), None) | (None, None) => {
                cfg.optimal = true;
                cfg.x_sq = optimal_splitting_ratio().0;
            }
            (Some(false), None) => {
                return Err(CliError::config("`x_sq` is required when `optimal = false`"))
            }
            (_, Some(v)) => {
                cfg.optimal = false;
                cfg.x_sq = v;
            }
        }
        cfg.to_model()?;
        Ok(cfg)
    }

    pub fn to_model(&self) -> Result<PolarimeterModel, CliError> {
        if !(self.x_sq > 0.5 && self.x_sq < 1.0) {
            return Err(CliError::config(format!(
                "x_sq = {} must lie strictly between 0.5 and 1",
                self.x_sq
            )));
        }
        let ppbs = PpbsSpec::lossless(self.x_sq)
            .map_err(CliError::from_config)?
            .with_phases(self.phase_t_deg.to_radians(), self.phase_r_deg.to_radians());
        let model = PolarimeterModel {
            ppbs,
            analyzer_t: AnalyzerSpec::new(
                self.analyzer_t_deg.0.to_radians(),
                self.analyzer_t_deg.1.to_radians(),
            ),
            analyzer_r: AnalyzerSpec::new(
                self.analyzer_r_deg.0.to_radians(),
                self.analyzer_r_deg.1.to_radians(),
            ),
            efficiencies: self.efficiencies,
            dark_rate: self.dark_rates,
        };
        model.validate().map_err(CliError::from_config)?;
        Ok(model)
    }

    /// Canonical `key = value` lines; parsing them back yields `self`.
    pub fn to_text(&self) -> String {
        let four = |a: &[f64; 4]| format!("{}, {}, {}, {}", a[0], a[1], a[2], a[3]);
        let mut lines = Vec::new();
        if self.optimal {
            lines.push("optimal = true".to_string());
        } else {
            lines.push(format!("x_sq = {}", self.x_sq));
        }
        lines.push(format!("analyzer_t_theta_deg = {}", self.analyzer_t_deg.0));
        lines.push(format!("analyzer_t_phi_deg = {}", self.analyzer_t_deg.1));
        lines.push(format!("analyzer_r_theta_deg = {}", self.analyzer_r_deg.0));
        lines.push(format!("analyzer_r_phi_deg = {}", self.analyzer_r_deg.1));
        lines.push(format!("phase_t_deg = {}", self.phase_t_deg));
        lines.push(format!("phase_r_deg = {}", self.phase_r_deg));
        lines.push(format!("efficiencies = {}", four(&self.efficiencies)));
        lines.push(format!("dark_rates = {}", four(&self.dark_rates)));
        lines.join("\n") + "\n"
    }
}

fn parse_num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{v}` is not finite"));
    }
    Ok(x)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn parse_four(v: &str) -> Result<[f64; 4], String> {
    let parts: Vec<_> = v.split(',').map(|p| parse_num(p.trim())).collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<f64>| format!("expected 4 comma-separated values, got {}", p.len()))
}

/// Photons per acquisition, or noiseless expectation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountMode {
    Poisson(f64),
    Exact,
}

/// Photon scale used for expected counts in `exact` mode, so that
/// propagated uncertainties keep a realistic magnitude.
pub const EXACT_NOMINAL_TOTAL: f64 = 1e5;

impl CountMode {
    pub fn scale(&self) -> f64 {
        match self {
            CountMode::Poisson(n) => *n,
            CountMode::Exact => EXACT_NOMINAL_TOTAL,
        }
    }
}

impl FromStr for CountMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.trim() == "exact" {
            return Ok(CountMode::Exact);
        }
        let n: f64 = s
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("counts `{s}` is neither a number nor `exact`")))?;
        if !(n > 0.0 && n.is_finite()) {
            return Err(CliError::config(format!("counts must be positive (got {s})")));
        }
        Ok(CountMode::Poisson(n))
    }
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountMode::Poisson(n) => write!(f, "{n}"),
            CountMode::Exact => f.write_str("exact"),
        }
    }
}

/// Half-open angle grid `start:stop:step` in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step - 1e-9).ceil().max(0.0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.value(i))
    }
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<_> = s.split(':').map(|p| parse_num(p.trim())).collect::<Result<_, _>>()
            .map_err(|e| CliError::config(format!("grid `{s}`: {e}")))?;
        let [start, stop, step] = parts[..] else {
            return Err(CliError::config(format!("grid `{s}` must be start:stop:step")));
        };
        let g = Grid { start, stop, step };
        if !(step > 0.0) || g.is_empty() {
            return Err(CliError::config(format!("grid `{s}` is empty")));
        }
        Ok(g)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// HWP/QWP sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub hwp: Grid,
    pub qwp: Grid,
    pub counts: CountMode,
    /// Standard deviation of the static waveplate offsets, radians.
    pub misalignment_sigma: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            hwp: Grid { start: 0.0, stop: 90.0, step: 3.0 },
            qwp: Grid { start: 0.0, stop: 180.0, step: 6.0 },
            counts: CountMode::Poisson(1e5),
            misalignment_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SweepConfig {
    /// Parses `HWP,QWP`, each a `start:stop:step` grid in degrees.
    pub fn parse_grids(spec: &str) -> Result<(Grid, Grid), CliError> {
        let (h, q) = spec
            .split_once(',')
            .ok_or_else(|| CliError::config(format!("grid spec `{spec}` must be HWP,QWP")))?;
        Ok((h.parse()?, q.parse()?))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.hwp.is_empty() || self.qwp.is_empty() {
            return Err(CliError::config("sweep grids must be non-empty"));
        }
        if !(self.misalignment_sigma >= 0.0 && self.misalignment_sigma.is_finite()) {
            return Err(CliError::config(format!(
                "misalignment must be non-negative (got {})",
                self.misalignment_sigma
            )));
        }
        Ok(())
    }
}
