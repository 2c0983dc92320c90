//! Instrument-matrix calibration from known input states and linear Stokes
//! reconstruction, with first-order Poisson error propagation.
//!
//! Calibration stacks the prepared Stokes vectors as the columns of `S̄`
//! (4×K) and the detector readings as the columns of `Ī` (4×K), and solves
//! `B·S̄ = Ī` in the least-squares sense: `B = Ī·S̄ᵀ(S̄·S̄ᵀ)⁻¹`. With K = 4 the
//! system is exactly determined and `B = Ī·S̄⁻¹`.
//!
//! Each reading is treated as an independent Poisson variable whose variance
//! equals the reading itself. Writing `P = S̄ᵀ(S̄·S̄ᵀ)⁻¹` and `Q = P·B⁻¹`,
//!
//! ```text
//! ∂(B⁻¹)[a,c] / ∂Ī[j,k] = −B⁻¹[a,j] · Q[k,c]
//! Var(B⁻¹[a,c]) = Σ_jk B⁻¹[a,j]² · Q[k,c]² · Ī[j,k]
//! ```

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector4};

use crate::error::{PolError, Result};
use crate::instrument::{condition_number_dyn, InstrumentMatrix, Readings, SINGULAR_CONDITION};
use crate::polarization::{ReducedStokes, StokesVector, PURITY_TOLERANCE};

/// Regular tetrahedron of calibration states, as normalized Stokes vectors:
/// `(1, √⅓, ±√⅔, 0)` and `(1, −√⅓, 0, ∓√⅔)`.
pub fn calibration_quartet() -> [StokesVector; 4] {
    let a = (1.0f64 / 3.0).sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    [
        StokesVector::new(1.0, a, b, 0.0),
        StokesVector::new(1.0, a, -b, 0.0),
        StokesVector::new(1.0, -a, 0.0, -b),
        StokesVector::new(1.0, -a, 0.0, b),
    ]
}

/// One calibration acquisition: a known pure input and the detector
/// readings it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRecord {
    pub prepared: StokesVector,
    pub readings: Readings,
}

impl CalibrationRecord {
    /// Normalizes `prepared` and checks that it is pure.
    pub fn new(prepared: StokesVector, readings: impl Into<Readings>) -> Result<Self> {
        let prepared = prepared.normalized()?;
        let dop = prepared.polarized_intensity();
        if (dop - 1.0).abs() > PURITY_TOLERANCE {
            return Err(PolError::NotPure(dop));
        }
        let readings = readings.into();
        if readings.0.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(PolError::InvalidParameter(format!(
                "calibration readings must be non-negative: {:?}",
                readings.0
            )));
        }
        Ok(Self { prepared, readings })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub instrument: InstrumentMatrix,
    /// Frobenius norm of `Ī − B·S̄`; zero for exactly determined systems.
    pub residual: f64,
}

impl CalibrationResult {
    /// Re-expresses the calibration per photon entering the device, given
    /// that each calibration acquisition saw `photons_per_state` photons:
    /// `B/k`, `B⁻¹·k`, `σ(B⁻¹)·k`. Reconstruction from raw counts then
    /// returns Stokes vectors in count units.
    pub fn per_photon(&self, photons_per_state: f64) -> Result<Self> {
        if !(photons_per_state > 0.0 && photons_per_state.is_finite()) {
            return Err(PolError::InvalidParameter(format!(
                "photon scale must be positive (got {photons_per_state})"
            )));
        }
        let k = photons_per_state;
        let mut instrument = self.instrument;
        instrument.b /= k;
        instrument.b_inv *= k;
        instrument.sigma_inv *= k;
        Ok(Self {
            instrument,
            residual: self.residual / k,
        })
    }
}

pub fn calibrate(records: &[CalibrationRecord]) -> Result<CalibrationResult> {
    let k = records.len();
    if k < 4 {
        return Err(PolError::Coplanar(format!(
            "need at least 4 calibration states, got {k}"
        )));
    }
    let states = DMatrix::from_fn(4, k, |i, c| records[c].prepared.to_array()[i]);
    let readings = DMatrix::from_fn(4, k, |i, c| records[c].readings.0[i]);

    let cond = condition_number_dyn(&states);
    if !(cond <= SINGULAR_CONDITION) {
        return Err(PolError::Coplanar(format!(
            "prepared states have condition number {cond:e}"
        )));
    }
    let gram_inv = (&states * states.transpose())
        .try_inverse()
        .ok_or_else(|| PolError::Coplanar("singular Gram matrix".into()))?;
    let pseudo = states.transpose() * gram_inv; // K×4
    let b_dyn = &readings * &pseudo;
    let b = Matrix4::from_fn(|i, j| b_dyn[(i, j)]);
    let instrument = InstrumentMatrix::new(b)?;

    let b_inv = DMatrix::from_column_slice(4, 4, instrument.b_inv.as_slice());
    let q = &pseudo * &b_inv; // K×4
    let sigma_inv = Matrix4::from_fn(|a, c| {
        let mut var = 0.0;
        for j in 0..4 {
            let left = b_inv[(a, j)] * b_inv[(a, j)];
            for rec in 0..k {
                var += left * q[(rec, c)] * q[(rec, c)] * readings[(j, rec)];
            }
        }
        var.sqrt()
    });

    let residual = (&readings - &b_dyn * &states).norm();
    Ok(CalibrationResult {
        instrument: instrument.with_sigma_inv(sigma_inv),
        residual,
    })
}

/// Linear reconstruction of one acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionResult {
    /// `B⁻¹·n`, unnormalized.
    pub raw: StokesVector,
    pub reduced: ReducedStokes,
    /// Propagated standard uncertainties of the four raw components.
    pub sigma: [f64; 4],
    /// First-order covariance of the reduced vector.
    pub reduced_cov: Matrix3<f64>,
    /// True when `|reduced|` exceeds one by no more than three propagated
    /// standard deviations.
    pub physical: bool,
    /// `reduced` clipped radially to the unit ball.
    pub projected: ReducedStokes,
}

impl ReconstructionResult {
    /// Standard uncertainties of the reduced components, from the quotient
    /// rule including the shared-count covariance with the intensity.
    pub fn reduced_sigma(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.reduced_cov[(k, k)].max(0.0).sqrt())
    }

    /// Propagated uncertainty of `|reduced|`.
    pub fn norm_sigma(&self) -> f64 {
        match self.reduced.to_unit_sphere() {
            Some(u) => quadratic_form(&self.reduced_cov, &u).max(0.0).sqrt(),
            None => self.reduced_sigma().iter().map(|s| s * s).sum::<f64>().sqrt(),
        }
    }

    /// Propagated uncertainty of `reduced·direction`.
    pub fn projection_sigma(&self, direction: &ReducedStokes) -> f64 {
        quadratic_form(&self.reduced_cov, direction).max(0.0).sqrt()
    }

    /// The pure state closest to the reconstruction: the reduced vector
    /// scaled to unit length. `None` for a vanishing polarization.
    pub fn pure_estimate(&self) -> Option<ReducedStokes> {
        self.reduced.to_unit_sphere()
    }
}

fn quadratic_form(m: &Matrix3<f64>, v: &ReducedStokes) -> f64 {
    let x = nalgebra::Vector3::from(v.to_array());
    (x.transpose() * m * x)[(0, 0)]
}

pub fn reconstruct(
    counts: impl Into<Readings>,
    cal: &CalibrationResult,
) -> Result<ReconstructionResult> {
    let n = counts.into();
    if n.0.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(PolError::InvalidParameter(format!(
            "counts must be non-negative: {:?}",
            n.0
        )));
    }
    if n.total() <= 0.0 {
        return Err(PolError::EmptyCounts);
    }
    let b_inv = &cal.instrument.b_inv;
    let raw_v = b_inv * Vector4::from(n.0);
    let raw = StokesVector::new(raw_v[0], raw_v[1], raw_v[2], raw_v[3]);
    if !(raw.s_m > 0.0) {
        return Err(PolError::NegativeIntensity(raw.s_m));
    }

    let sigma = std::array::from_fn(|i| {
        (0..4)
            .map(|j| b_inv[(i, j)] * b_inv[(i, j)] * n.0[j])
            .sum::<f64>()
            .sqrt()
    });

    let r = [raw.s_x / raw.s_m, raw.s_y / raw.s_m, raw.s_z / raw.s_m];
    // ∂r_k/∂n_j = (B⁻¹[k+1, j] − r_k·B⁻¹[0, j]) / s_m
    let grad = |k: usize, j: usize| (b_inv[(k + 1, j)] - r[k] * b_inv[(0, j)]) / raw.s_m;
    let reduced_cov = Matrix3::from_fn(|k, l| (0..4).map(|j| grad(k, j) * grad(l, j) * n.0[j]).sum());

    let reduced = ReducedStokes::from_array(r);
    let mut out = ReconstructionResult {
        raw,
        reduced,
        sigma,
        reduced_cov,
        physical: true,
        projected: reduced.clip_to_unit_ball(),
    };
    out.physical = reduced.norm() <= 1.0 + 3.0 * out.norm_sigma();
    Ok(out)
}

/// Raw-component uncertainties of a reconstruction.
pub fn reconstruction_uncertainty(result: &ReconstructionResult) -> [f64; 4] {
    result.sigma
}

/// Fidelity of a reconstruction to a pure target state, taking the
/// reconstruction as the pure state along its reduced vector. The returned
/// uncertainty is the propagated counting error of the linear overlap
/// `(1 + r·t)/2` before renormalization.
pub fn fidelity_to_pure_target(
    result: &ReconstructionResult,
    target: &ReducedStokes,
) -> Result<(f64, f64)> {
    let t = target
        .to_unit_sphere()
        .ok_or(PolError::NotPure(target.norm()))?;
    if (target.norm() - 1.0).abs() > PURITY_TOLERANCE {
        return Err(PolError::NotPure(target.norm()));
    }
    let rec = result.pure_estimate().ok_or(PolError::NotPure(0.0))?;
    let f = crate::polarization::fidelity_pure(
        &StokesVector::from_reduced(rec),
        &StokesVector::from_reduced(t),
    )?;
    Ok((f, 0.5 * result.projection_sigma(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{expected_counts, CountVector, PolarimeterModel};

    fn exact_calibration(m: &PolarimeterModel, total: f64) -> CalibrationResult {
        let recs: Vec<_> = calibration_quartet()
            .iter()
            .map(|s| CalibrationRecord::new(*s, expected_counts(s, m, total).unwrap()).unwrap())
            .collect();
        calibrate(&recs).unwrap()
    }

    #[test]
    fn quartet_geometry() {
        let q = calibration_quartet();
        let r: Vec<_> = q.iter().map(|s| s.reduced().unwrap()).collect();
        for b in &r {
            assert!((b.norm() - 1.0).abs() < 1e-15);
        }
        for j in 0..4 {
            for k in j + 1..4 {
                assert!((r[j].dot(&r[k]) + 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let a = (1.0f64 / 3.0).sqrt();
        let b = (2.0f64 / 3.0).sqrt();
        assert_eq!(q[0].to_array(), [1.0, a, b, 0.0]);
        assert_eq!(q[3].to_array(), [1.0, -a, 0.0, b]);
    }

    #[test]
    fn exact_calibration_recovers_model() {
        let m = PolarimeterModel::ideal();
        let cal = exact_calibration(&m, 1.0);
        assert!((cal.instrument.b - m.response_matrix()).norm() < 1e-14);
        assert!(cal.residual < 1e-14);
        assert!((cal.instrument.b * cal.instrument.b_inv - Matrix4::identity()).norm() < 1e-12);
    }

    #[test]
    fn too_few_or_coplanar_records() {
        let m = PolarimeterModel::ideal();
        let q = calibration_quartet();
        let recs: Vec<_> = q[..3]
            .iter()
            .map(|s| CalibrationRecord::new(*s, expected_counts(s, &m, 1.0).unwrap()).unwrap())
            .collect();
        assert!(matches!(calibrate(&recs), Err(PolError::Coplanar(_))));

        let flat = [
            StokesVector::new(1.0, 1.0, 0.0, 0.0),
            StokesVector::new(1.0, -1.0, 0.0, 0.0),
            StokesVector::new(1.0, 0.0, 1.0, 0.0),
            StokesVector::new(1.0, 0.0, -1.0, 0.0),
        ];
        let recs: Vec<_> = flat
            .iter()
            .map(|s| CalibrationRecord::new(*s, expected_counts(s, &m, 1.0).unwrap()).unwrap())
            .collect();
        assert!(matches!(calibrate(&recs), Err(PolError::Coplanar(_))));
    }

    #[test]
    fn records_must_be_pure() {
        let r = CalibrationRecord::new(StokesVector::new(1.0, 0.5, 0.0, 0.0), Readings([1.0; 4]));
        assert!(matches!(r, Err(PolError::NotPure(_))));
        let r = CalibrationRecord::new(StokesVector::new(2.0, 2.0, 0.0, 0.0), Readings([1.0; 4]))
            .unwrap();
        assert_eq!(r.prepared.s_m, 1.0);
    }

    #[test]
    fn overdetermined_calibration_matches_exact() {
        let m = PolarimeterModel::ideal();
        let mut states = calibration_quartet().to_vec();
        states.push(StokesVector::new(1.0, 1.0, 0.0, 0.0));
        states.push(StokesVector::new(1.0, 0.0, 0.0, -1.0));
        let recs: Vec<_> = states
            .iter()
            .map(|s| CalibrationRecord::new(*s, expected_counts(s, &m, 1.0).unwrap()).unwrap())
            .collect();
        let cal = calibrate(&recs).unwrap();
        assert!((cal.instrument.b - m.response_matrix()).norm() < 1e-14);
        assert!(cal.residual < 1e-14);
    }

    #[test]
    fn equal_counts_are_unpolarized() {
        let cal = exact_calibration(&PolarimeterModel::ideal(), 1.0);
        let rec = reconstruct(CountVector([1, 1, 1, 1]), &cal).unwrap();
        assert!(rec.reduced.norm() < 1e-12);
        assert!(rec.physical);
    }

    #[test]
    fn reconstruct_errors() {
        let cal = exact_calibration(&PolarimeterModel::ideal(), 1.0);
        assert_eq!(
            reconstruct(CountVector([0; 4]), &cal),
            Err(PolError::EmptyCounts)
        );
        assert!(reconstruct(Readings([1.0, -2.0, 0.0, 0.0]), &cal).is_err());
    }

    #[test]
    fn unphysical_counts_are_flagged_and_projected() {
        let cal = exact_calibration(&PolarimeterModel::ideal(), 1.0);
        // All light at detector 1: raw = 1000·(1, 3·b_1), so |r| = 3.
        let rec = reconstruct(CountVector([1000, 0, 0, 0]), &cal).unwrap();
        assert!((rec.reduced.norm() - 3.0).abs() < 1e-9);
        assert!(!rec.physical);
        assert!((rec.projected.norm() - 1.0).abs() < 1e-12);
        let dir = rec.reduced.scale(1.0 / 3.0);
        assert!(rec.projected.sub(&dir).norm() < 1e-12);
    }

    #[test]
    fn uncertainty_scaling() {
        let cal = exact_calibration(&PolarimeterModel::ideal(), 1.0);
        let n = Readings([120.0, 340.0, 50.0, 490.0]);
        let a = reconstruct(n, &cal).unwrap();
        let b = reconstruct(n.scaled(2.0), &cal).unwrap();
        for i in 0..4 {
            assert!((b.sigma[i] / a.sigma[i] - 2f64.sqrt()).abs() < 1e-12);
        }
        for k in 0..3 {
            let ra = a.reduced_sigma()[k];
            let rb = b.reduced_sigma()[k];
            assert!((ra / rb - 2f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(reconstruction_uncertainty(&a), a.sigma);
    }

    #[test]
    fn zero_reading_contributes_nothing() {
        let cal = exact_calibration(&PolarimeterModel::ideal(), 1.0);
        let with_zero = reconstruct(Readings([10.0, 0.0, 30.0, 40.0]), &cal).unwrap();
        let b_inv = cal.instrument.b_inv;
        for i in 0..4 {
            let e = (b_inv[(i, 0)].powi(2) * 10.0
                + b_inv[(i, 2)].powi(2) * 30.0
                + b_inv[(i, 3)].powi(2) * 40.0)
                .sqrt();
            assert!((with_zero.sigma[i] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_inv_scales_with_counts() {
        // B scales with c and B⁻¹ with 1/c; relative uncertainties go as 1/√c.
        let m = PolarimeterModel::ideal();
        let a = exact_calibration(&m, 1e4);
        let b = exact_calibration(&m, 4e4);
        for i in 0..16 {
            let sa = a.instrument.sigma_inv[i] / a.instrument.b_inv[i].abs().max(1e-300);
            let sb = b.instrument.sigma_inv[i] / b.instrument.b_inv[i].abs().max(1e-300);
            if a.instrument.b_inv[i].abs() > 1e-9 {
                assert!((sa / sb - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn per_photon_rescaling() {
        let m = PolarimeterModel::ideal();
        let counts = exact_calibration(&m, 1e5);
        let unit = counts.per_photon(1e5).unwrap();
        assert!((unit.instrument.b - m.response_matrix()).norm() < 1e-14);
        assert!((unit.instrument.b_inv.row(0).sum() - 4.0).abs() < 1e-12);
        assert_eq!(unit.instrument.cond, counts.instrument.cond);
        let n = Readings([100.0, 200.0, 300.0, 400.0]);
        let a = reconstruct(n, &counts).unwrap();
        let b = reconstruct(n, &unit).unwrap();
        assert!(a.reduced.sub(&b.reduced).norm() < 1e-12);
        assert!((b.raw.s_m - 1e5 * a.raw.s_m).abs() < 1e-6);
        assert!(counts.per_photon(0.0).is_err());
    }

    #[test]
    fn fidelity_against_target() {
        let m = PolarimeterModel::ideal();
        let cal = exact_calibration(&m, 1e5);
        let h = StokesVector::new(1.0, 1.0, 0.0, 0.0);
        let n = expected_counts(&h, &m, 1e5).unwrap();
        let rec = reconstruct(n, &cal).unwrap();
        let (f, s) = fidelity_to_pure_target(&rec, &h.reduced().unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!(s > 0.0 && s < 0.01);
        let (f, _) = fidelity_to_pure_target(&rec, &ReducedStokes::new(-1.0, 0.0, 0.0)).unwrap();
        assert!(f.abs() < 1e-12);
        assert!(fidelity_to_pure_target(&rec, &ReducedStokes::new(0.5, 0.0, 0.0)).is_err());
    }
}
