use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::json;

use crate::calibration::{
    calibrate, calibration_quartet, fidelity_to_pure_target, reconstruct, CalibrationRecord,
    CalibrationResult,
};
use crate::design::{maximize_determinant, optimal_splitting_ratio};
use crate::error::PolError;
use crate::instrument::{
    effective_frame, expected_counts, simulate_counts, CountVector, PolarimeterModel, Readings,
};
use crate::optics::{generate_state, AnalyzerSpec};
use crate::polarization::{jones_to_stokes, StokesVector};

use super::calfile::{read_calibration, CalibrationFile};
use super::config::{CountMode, DeviceConfig, SweepConfig, EXACT_NOMINAL_TOTAL};
use super::seed::{derive_seed, splitmix64};
use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub closed_form: f64,
    pub numeric: f64,
    pub tolerance: f64,
    pub frame_dots: [f64; 6],
    pub condition_number: f64,
}

impl DesignReport {
    pub fn difference(&self) -> f64 {
        self.numeric - self.closed_form
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "closed-form splitting ratio x^2 = {}", self.closed_form);
        let _ = writeln!(
            s,
            "max |det B| splitting ratio x^2 = {} (tolerance {})",
            self.numeric, self.tolerance
        );
        let _ = writeln!(s, "difference = {:e}", self.difference());
        let dots: Vec<String> = self.frame_dots.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "frame pairwise dots = [{}]", dots.join(", "));
        let _ = writeln!(s, "instrument matrix condition number = {}", self.condition_number);
        s
    }

    pub fn json(&self) -> String {
        json!({
            "closed_form_x_sq": self.closed_form,
            "numeric_x_sq": self.numeric,
            "difference": self.difference(),
            "tolerance": self.tolerance,
            "frame_dots": self.frame_dots,
            "condition_number": self.condition_number,
        })
        .to_string()
    }
}

/// Closed-form optimum, determinant-maximizing optimum, and the resulting
/// frame geometry for the diagonal/circular analyzer choice.
pub fn cmd_design(tolerance: f64) -> Result<DesignReport, CliError> {
    let (t, r) = (AnalyzerSpec::diagonal(), AnalyzerSpec::circular());
    let numeric = maximize_determinant(&t, &r, tolerance)?;
    let model = PolarimeterModel::ideal();
    let frame = effective_frame(&model)?;
    let inst = model.instrument_matrix()?;
    Ok(DesignReport {
        closed_form: optimal_splitting_ratio().0,
        numeric,
        tolerance,
        frame_dots: frame.pairwise_dots(),
        condition_number: inst.cond,
    })
}

fn acquire(
    s: &StokesVector,
    model: &PolarimeterModel,
    counts: CountMode,
    seed: u64,
) -> Result<Readings, PolError> {
    match counts {
        CountMode::Poisson(n) => simulate_counts(s, model, n, seed).map(Readings::from),
        CountMode::Exact => expected_counts(s, model, EXACT_NOMINAL_TOTAL),
    }
}

/// Simulates the tetrahedral calibration quartet through the device and
/// fits the instrument matrix, expressed per incident photon. Quartet state
/// `k` uses sub-seed `derive_seed(seed, 0, k)`.
pub fn cmd_calibrate(
    device: &DeviceConfig,
    counts: CountMode,
    seed: u64,
) -> Result<CalibrationFile, CliError> {
    let model = device.to_model()?;
    let records = calibration_quartet()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let readings = acquire(s, &model, counts, derive_seed(seed, 0, k as u32))?;
            CalibrationRecord::new(*s, readings)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let result = calibrate(&records)
        .and_then(|c| c.per_photon(counts.scale()))
        .map_err(|e| CliError::from(e).context("calibration"))?;
    Ok(CalibrationFile {
        result,
        seed,
        counts,
        device: device.to_text(),
    })
}

/// Reconstructs one count vector against a calibration file and formats
/// the result as text followed by a one-line JSON record.
pub fn cmd_reconstruct(calibration_text: &str, counts: [u64; 4]) -> Result<String, CliError> {
    let cal = read_calibration(calibration_text)?;
    let rec = reconstruct(CountVector(counts), &cal)?;
    let raw = rec.raw.to_array();
    let reduced = rec.reduced.to_array();
    let projected = rec.projected.to_array();
    let reduced_sigma = rec.reduced_sigma();
    let mut s = String::new();
    let _ = writeln!(s, "counts = {counts:?}");
    let _ = writeln!(s, "raw stokes = {raw:?}");
    let _ = writeln!(s, "raw sigma = {:?}", rec.sigma);
    let _ = writeln!(s, "reduced = {reduced:?}");
    let _ = writeln!(s, "reduced sigma = {reduced_sigma:?}");
    let _ = writeln!(s, "degree of polarization = {} +/- {}", rec.reduced.norm(), rec.norm_sigma());
    let _ = writeln!(s, "physical = {}", rec.physical);
    let _ = writeln!(s, "projected = {projected:?}");
    let record = json!({
        "counts": counts,
        "raw": raw,
        "sigma": rec.sigma,
        "reduced": reduced,
        "reduced_sigma": reduced_sigma,
        "physical": rec.physical,
        "projected": projected,
    });
    let _ = writeln!(s, "{record}");
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub hwp_deg: f64,
    pub qwp_deg: f64,
    pub fidelity: f64,
    pub sigma_fidelity: f64,
    pub n_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// CSV file contents.
    pub csv: String,
}

impl SweepOutput {
    pub fn summary(&self) -> String {
        format!(
            "points = {}\nmean_fidelity = {}\nmin_fidelity = {}\nmax_fidelity = {}\n",
            self.rows.len(),
            self.mean,
            self.min,
            self.max
        )
    }
}

/// Mean, minimum and maximum of the fidelity column, in row order.
pub fn summarize(rows: &[SweepRow]) -> (f64, f64, f64) {
    let sum: f64 = rows.iter().map(|r| r.fidelity).sum();
    let min = rows.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.fidelity).fold(f64::NEG_INFINITY, f64::max);
    (sum / rows.len() as f64, min, max)
}

fn sweep_point(
    model: &PolarimeterModel,
    cal: &CalibrationResult,
    sweep: &SweepConfig,
    i: usize,
    j: usize,
) -> Result<SweepRow, CliError> {
    let hwp_deg = sweep.hwp.value(i);
    let qwp_deg = sweep.qwp.value(j);
    let (h, q) = (hwp_deg.to_radians(), qwp_deg.to_radians());
    let point_seed = derive_seed(sweep.seed, i as u32, j as u32);

    let (dh, dq) = if sweep.misalignment_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
        let normal = Normal::new(0.0, sweep.misalignment_sigma)
            .map_err(|e| CliError::config(e.to_string()))?;
        (normal.sample(&mut rng), normal.sample(&mut rng))
    } else {
        (0.0, 0.0)
    };

    let target = jones_to_stokes(&generate_state(h, q, 0.0, 0.0)).reduced()?;
    let actual = jones_to_stokes(&generate_state(h, q, dh, dq));
    let ctx = || format!("sweep point hwp = {hwp_deg} deg, qwp = {qwp_deg} deg");
    let readings = acquire(&actual, model, sweep.counts, splitmix64(point_seed))
        .map_err(|e| CliError::from(e).context(ctx()))?;

    // Without counts or without a polarization direction the estimate is the
    // maximally mixed state, whose fidelity to any pure target is 1/2.
    let (fidelity, sigma_fidelity) = match reconstruct(readings, cal) {
        Ok(rec) if rec.pure_estimate().is_some() => fidelity_to_pure_target(&rec, &target)
            .map_err(|e| CliError::from(e).context(ctx()))?,
        Ok(_) | Err(PolError::EmptyCounts) | Err(PolError::NegativeIntensity(_)) => (0.5, 0.5),
        Err(e) => return Err(CliError::from(e).context(ctx())),
    };
    Ok(SweepRow {
        hwp_deg,
        qwp_deg,
        fidelity,
        sigma_fidelity,
        n_total: readings.total(),
    })
}

/// Fidelity map over the HWP/QWP grid. Points are evaluated on `threads`
/// worker threads (0 = rayon default) and emitted in grid order.
pub fn cmd_sweep(
    device: &DeviceConfig,
    sweep: &SweepConfig,
    cal: &CalibrationResult,
    threads: usize,
) -> Result<SweepOutput, CliError> {
    sweep.validate()?;
    let model = device.to_model()?;
    let (nh, nq) = (sweep.hwp.len(), sweep.qwp.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(e.to_string()))?;
    let rows = pool.install(|| {
        (0..nh * nq)
            .into_par_iter()
            .map(|p| sweep_point(&model, cal, sweep, p / nq, p % nq))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let (mean, min, max) = summarize(&rows);

    let mut csv = String::new();
    csv.push_str("# polcli sweep\n");
    let _ = writeln!(csv, "# format_version = {}", super::calfile::FORMAT_VERSION);
    let _ = writeln!(csv, "# seed = {}", sweep.seed);
    csv.push_str("# seeding = point (i, j) uses splitmix64(seed ^ splitmix64((i << 32) | j)); offsets from ChaCha8 on that seed, counts from ChaCha8 on splitmix64(point seed)\n");
    let _ = writeln!(csv, "# counts = {}", sweep.counts);
    let _ = writeln!(csv, "# misalignment_sigma_rad = {}", sweep.misalignment_sigma);
    let _ = writeln!(csv, "# hwp_grid_deg = {}", sweep.hwp);
    let _ = writeln!(csv, "# qwp_grid_deg = {}", sweep.qwp);
    let _ = writeln!(csv, "# calibration_condition_number = {}", cal.instrument.cond);
    for line in device.to_text().lines() {
        let _ = writeln!(csv, "# device: {line}");
    }
    csv.push_str("hwp_deg,qwp_deg,fidelity,sigma_fidelity,n_total\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.hwp_deg, r.qwp_deg, r.fidelity, r.sigma_fidelity, r.n_total
        );
    }
    let _ = writeln!(csv, "# mean_fidelity = {mean}");
    let _ = writeln!(csv, "# min_fidelity = {min}");
    let _ = writeln!(csv, "# max_fidelity = {max}");

    Ok(SweepOutput { rows, mean, min, max, csv })
}
