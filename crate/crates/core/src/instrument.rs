//! The assembled four-detector polarimeter.
//!
//! Detectors 1 and 2 sit behind the analyzer in the PPBS transmitted arm
//! (`+` and `−` outputs), detectors 3 and 4 behind the reflected-arm
//! analyzer. Each detector `j` responds to the input through a detection
//! state `d_j = A_arm† u_j`, where `A_arm` is the PPBS arm matrix and `u_j`
//! the analyzer basis vector, so that `I_j = η_j |⟨d_j|v⟩|²` for a pure input
//! and `I_j = η_j Tr(|d_j⟩⟨d_j| ρ)` in general.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{PolError, Result};
use crate::optics::{analyzer_intensities, ppbs_split, AnalyzerSpec, PpbsSpec};
use crate::polarization::{jones_to_stokes, JonesVector, ReducedStokes, StokesVector};

/// Condition number above which an instrument matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e8;

/// Slack on the degree of polarization before a state is rejected as
/// unphysical.
pub const PHYSICAL_TOLERANCE: f64 = 1e-9;

/// Squared amplitude below which a detection state counts as missing.
const MIN_DETECTION_WEIGHT: f64 = 1e-14;

/// Four measurement directions on the Poincaré sphere, one per detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetrahedronFrame {
    pub vectors: [ReducedStokes; 4],
}

impl TetrahedronFrame {
    pub fn new(vectors: [ReducedStokes; 4]) -> Self {
        Self { vectors }
    }

    /// The six dot products `b_j·b_k` for `j < k`, in lexicographic order.
    pub fn pairwise_dots(&self) -> [f64; 6] {
        let v = &self.vectors;
        let mut out = [0.0; 6];
        let mut n = 0;
        for j in 0..4 {
            for k in j + 1..4 {
                out[n] = v[j].dot(&v[k]);
                n += 1;
            }
        }
        out
    }

    pub fn vector_sum(&self) -> ReducedStokes {
        self.vectors.iter().fold(ReducedStokes::new(0.0, 0.0, 0.0), |acc, b| {
            ReducedStokes::new(acc.r_x + b.r_x, acc.r_y + b.r_y, acc.r_z + b.r_z)
        })
    }

    /// Unit vectors, zero sum and pairwise dots of −1/3, all within `tol`.
    pub fn is_regular(&self, tol: f64) -> bool {
        self.vectors.iter().all(|b| (b.norm() - 1.0).abs() <= tol)
            && self.vector_sum().norm() <= tol
            && self
                .pairwise_dots()
                .iter()
                .all(|d| (d + 1.0 / 3.0).abs() <= tol)
    }
}

/// Physical description of the polarimeter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarimeterModel {
    pub ppbs: PpbsSpec,
    /// Analyzer in the transmitted arm (detectors 1 and 2).
    pub analyzer_t: AnalyzerSpec,
    /// Analyzer in the reflected arm (detectors 3 and 4).
    pub analyzer_r: AnalyzerSpec,
    /// Relative detector efficiencies in `(0, 1]`.
    pub efficiencies: [f64; 4],
    /// Expected dark counts per acquisition, per detector.
    pub dark_rate: [f64; 4],
}

impl Default for PolarimeterModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl PolarimeterModel {
    /// Optimal splitting ratio, diagonal analyzer on the transmitted arm,
    /// circular analyzer on the reflected arm, perfect detectors.
    pub fn ideal() -> Self {
        Self::with_ppbs(PpbsSpec::optimal())
    }

    pub fn with_ppbs(ppbs: PpbsSpec) -> Self {
        Self {
            ppbs,
            analyzer_t: AnalyzerSpec::diagonal(),
            analyzer_r: AnalyzerSpec::circular(),
            efficiencies: [1.0; 4],
            dark_rate: [0.0; 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.ppbs;
        if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
            return Err(PolError::InvalidParameter(format!(
                "PPBS amplitudes x = {}, y = {} outside [0, 1]",
                p.x, p.y
            )));
        }
        self.analyzer_t.validate()?;
        self.analyzer_r.validate()?;
        if let Some(e) = self.efficiencies.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(PolError::InvalidParameter(format!(
                "detector efficiency {e} outside (0, 1]"
            )));
        }
        if let Some(d) = self.dark_rate.iter().find(|&&d| !(d >= 0.0 && d.is_finite())) {
            return Err(PolError::InvalidParameter(format!("dark rate {d} is negative")));
        }
        Ok(())
    }

    /// The four detection states `d_j`, unnormalized. `|d_j|²` is the
    /// fraction of unpolarized light reaching detector `j` before efficiency.
    pub fn detection_states(&self) -> [JonesVector; 4] {
        let t = self.ppbs.transmitted_matrix().adjoint();
        let r = self.ppbs.reflected_matrix().adjoint();
        [
            t.apply(&self.analyzer_t.plus_state()),
            t.apply(&self.analyzer_t.minus_state()),
            r.apply(&self.analyzer_r.plus_state()),
            r.apply(&self.analyzer_r.minus_state()),
        ]
    }

    /// Detection operators `η_j |d_j⟩⟨d_j|`; they sum to the identity for a
    /// lossless device with unit efficiencies.
    pub fn detection_operators(&self) -> [Matrix2<Complex64>; 4] {
        let d = self.detection_states();
        std::array::from_fn(|j| d[j].outer() * Complex64::new(self.efficiencies[j], 0.0))
    }

    /// Linear map from the Stokes 4-vector to the (dark-free) detector
    /// intensities. Row `j` is `η_j/2 · S(d_j)`.
    pub fn response_matrix(&self) -> Matrix4<f64> {
        let d = self.detection_states();
        let mut b = Matrix4::zeros();
        for j in 0..4 {
            let s = jones_to_stokes(&d[j]).to_array();
            for k in 0..4 {
                b[(j, k)] = 0.5 * self.efficiencies[j] * s[k];
            }
        }
        b
    }

    pub fn instrument_matrix(&self) -> Result<InstrumentMatrix> {
        InstrumentMatrix::new(self.response_matrix())
    }

    /// Per-detector throughput relative to an ideal tetrahedron detector:
    /// `2 η_j |d_j|²`.
    pub fn throughputs(&self) -> [f64; 4] {
        let d = self.detection_states();
        std::array::from_fn(|j| 2.0 * self.efficiencies[j] * d[j].intensity())
    }

    /// Expected intensities for an arbitrary (possibly mixed) Stokes input,
    /// including dark counts.
    pub fn stokes_intensities(&self, s: &StokesVector) -> [f64; 4] {
        let i = self.response_matrix() * Vector4::from(s.to_array());
        std::array::from_fn(|j| i[j] + self.dark_rate[j])
    }
}

/// Intensity at each detector for a pure input, propagated through the
/// Jones-calculus chain (PPBS, then analyzers), scaled by the efficiencies
/// and offset by the dark rates.
pub fn detector_intensities(v: &JonesVector, m: &PolarimeterModel) -> [f64; 4] {
    let (transmitted, reflected) = ppbs_split(v, &m.ppbs);
    let (i1, i2) = analyzer_intensities(&transmitted, &m.analyzer_t);
    let (i3, i4) = analyzer_intensities(&reflected, &m.analyzer_r);
    let raw = [i1, i2, i3, i4];
    std::array::from_fn(|j| raw[j] * m.efficiencies[j] + m.dark_rate[j])
}

/// Reduced Stokes vectors of the normalized detection states.
pub fn effective_frame(m: &PolarimeterModel) -> Result<TetrahedronFrame> {
    let d = m.detection_states();
    let mut vectors = [ReducedStokes::new(0.0, 0.0, 0.0); 4];
    for (j, state) in d.iter().enumerate() {
        if state.intensity() < MIN_DETECTION_WEIGHT {
            return Err(PolError::DegenerateFrame(j + 1));
        }
        vectors[j] = jones_to_stokes(state).reduced()?;
    }
    Ok(TetrahedronFrame::new(vectors))
}

/// Instrument matrix with rows `(t_j/4)·(1, b_j)`.
pub fn instrument_matrix_from_frame(
    f: &TetrahedronFrame,
    throughput: [f64; 4],
) -> Result<InstrumentMatrix> {
    if let Some(t) = throughput.iter().find(|&&t| !(t > 0.0)) {
        return Err(PolError::InvalidParameter(format!(
            "throughput {t} must be positive"
        )));
    }
    let mut b = Matrix4::zeros();
    for j in 0..4 {
        let row = [1.0, f.vectors[j].r_x, f.vectors[j].r_y, f.vectors[j].r_z];
        for k in 0..4 {
            b[(j, k)] = 0.25 * throughput[j] * row[k];
        }
    }
    InstrumentMatrix::new(b)
}

/// `I = B·S`, with the inverse, its 2-norm condition number and the
/// element-wise standard uncertainties of the inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstrumentMatrix {
    pub b: Matrix4<f64>,
    pub b_inv: Matrix4<f64>,
    pub cond: f64,
    pub sigma_inv: Matrix4<f64>,
}

impl InstrumentMatrix {
    /// Inverts `b`; `sigma_inv` starts at zero.
    pub fn new(b: Matrix4<f64>) -> Result<Self> {
        let cond = condition_number(&b);
        if !(cond <= SINGULAR_CONDITION) {
            return Err(PolError::Singular(cond));
        }
        let b_inv = b.try_inverse().ok_or(PolError::Singular(cond))?;
        Ok(Self {
            b,
            b_inv,
            cond,
            sigma_inv: Matrix4::zeros(),
        })
    }

    pub fn with_sigma_inv(mut self, sigma_inv: Matrix4<f64>) -> Self {
        self.sigma_inv = sigma_inv;
        self
    }

    pub fn apply(&self, s: &StokesVector) -> [f64; 4] {
        let i = self.b * Vector4::from(s.to_array());
        [i[0], i[1], i[2], i[3]]
    }
}

/// Ratio of the largest to smallest singular value; infinite when the
/// smallest vanishes.
pub fn condition_number(m: &Matrix4<f64>) -> f64 {
    condition_number_dyn(&DMatrix::from_column_slice(4, 4, m.as_slice()))
}

pub fn condition_number_dyn(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Photon counts at the four detectors for one acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CountVector(pub [u64; 4]);

impl CountVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn readings(&self) -> Readings {
        Readings::from(*self)
    }
}

/// Detector readings as reals: measured counts, or expected counts in
/// noiseless mode. The Poisson variance of each reading equals the reading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Readings(pub [f64; 4]);

impl Readings {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0.map(|x| x * k))
    }
}

impl From<CountVector> for Readings {
    fn from(c: CountVector) -> Self {
        Self(c.0.map(|n| n as f64))
    }
}

/// Mean counts per detector when a state of normalized Stokes vector `s` is
/// measured with `mean_total` photons entering the device.
pub fn expected_counts(s: &StokesVector, m: &PolarimeterModel, mean_total: f64) -> Result<Readings> {
    if !(mean_total > 0.0 && mean_total.is_finite()) {
        return Err(PolError::InvalidParameter(format!(
            "mean_total must be positive (got {mean_total})"
        )));
    }
    let dop = s.degree_of_polarization()?;
    if dop > 1.0 + PHYSICAL_TOLERANCE {
        return Err(PolError::Unphysical(dop));
    }
    let unit = s.normalized()?;
    let i = m.response_matrix() * Vector4::from(unit.to_array());
    Ok(Readings(std::array::from_fn(|j| {
        (mean_total * i[j]).max(0.0) + m.dark_rate[j]
    })))
}

/// Draws one acquisition of Poisson counts. The generator is private to the
/// call and seeded from `seed` only.
pub fn simulate_counts(
    s: &StokesVector,
    m: &PolarimeterModel,
    mean_total: f64,
    seed: u64,
) -> Result<CountVector> {
    let lambda = expected_counts(s, m, mean_total)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [0u64; 4];
    for (n, &l) in out.iter_mut().zip(&lambda.0) {
        *n = sample_poisson(l, &mut rng);
    }
    Ok(CountVector(out))
}

/// Exact Poisson draw; zero mean gives zero.
pub fn sample_poisson<R: rand::Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let d = Poisson::new(lambda).expect("positive finite mean");
    d.sample(rng) as u64
}
