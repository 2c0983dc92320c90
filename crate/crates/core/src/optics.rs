//! Jones-calculus models of the optical train: waveplates and the
//! HWP → QWP state generator, the partially polarizing beam splitter (PPBS)
//! with its phase compensators, and the two-output analyzers.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{PolError, Result};
use crate::polarization::JonesVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// 2×2 complex matrix acting on Jones vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub Matrix2<Complex64>);

impl JonesMatrix {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn diagonal(a: Complex64, d: Complex64) -> Self {
        Self(Matrix2::new(a, ZERO, ZERO, d))
    }

    /// Real rotation by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix2::new(c.into(), (-s).into(), s.into(), c.into()))
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector::new(
            m[(0, 0)] * v.alpha + m[(0, 1)] * v.beta,
            m[(1, 0)] * v.alpha + m[(1, 1)] * v.beta,
        )
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Frobenius norm of `U†U − I`.
    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }
}

/// Linear retarder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSpec {
    /// Retardance in radians, in `[0, 2π)`.
    pub retardance: f64,
    /// Fast-axis angle from H in radians, in `(−π/2, π/2]`.
    pub fast_axis: f64,
}

impl WaveplateSpec {
    /// Builds a retarder, wrapping both angles into their canonical ranges.
    /// The Jones matrix is π-periodic in the fast-axis angle.
    pub fn new(retardance: f64, fast_axis: f64) -> Self {
        let retardance = retardance.rem_euclid(2.0 * PI);
        let mut axis = fast_axis.rem_euclid(PI);
        if axis > FRAC_PI_2 {
            axis -= PI;
        }
        Self {
            retardance,
            fast_axis: axis,
        }
    }

    pub fn half_wave(fast_axis: f64) -> Self {
        Self::new(PI, fast_axis)
    }

    pub fn quarter_wave(fast_axis: f64) -> Self {
        Self::new(FRAC_PI_2, fast_axis)
    }

    pub fn matrix(&self) -> JonesMatrix {
        waveplate_matrix(self)
    }
}

/// `R(θ)·diag(1, e^{iΓ})·R(−θ)`: the fast axis has zero phase, the slow axis
/// picks up `e^{iΓ}`.
pub fn waveplate_matrix(w: &WaveplateSpec) -> JonesMatrix {
    let retarder = JonesMatrix::diagonal(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, w.retardance),
    );
    JonesMatrix::rotation(w.fast_axis)
        .then_after(&retarder)
        .then_after(&JonesMatrix::rotation(-w.fast_axis))
}

/// State produced by H light passing a half-wave plate and then a
/// quarter-wave plate. The offsets are added to the nominal angles and model
/// static mount misalignment.
pub fn generate_state(
    hwp_angle: f64,
    qwp_angle: f64,
    hwp_offset: f64,
    qwp_offset: f64,
) -> JonesVector {
    let hwp = WaveplateSpec::half_wave(hwp_angle + hwp_offset).matrix();
    let qwp = WaveplateSpec::quarter_wave(qwp_angle + qwp_offset).matrix();
    qwp.then_after(&hwp).apply(&JonesVector::horizontal())
}

/// Partially polarizing beam splitter with its compensators folded in.
///
/// Input `(α, β)` leaves as `(yα, e^{iφ_t}xβ)` in the transmitted arm and
/// `(xα, e^{iφ_r}yβ)` in the reflected arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpbsSpec {
    pub x: f64,
    pub y: f64,
    pub phase_t: f64,
    pub phase_r: f64,
}

impl PpbsSpec {
    /// Lossless, perfectly compensated splitter with intensity ratio
    /// `x² = x_sq`, `y² = 1 − x_sq`.
    pub fn lossless(x_sq: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&x_sq) {
            return Err(PolError::InvalidParameter(format!(
                "splitting ratio x^2 = {x_sq} outside [0.5, 1]"
            )));
        }
        Ok(Self {
            x: x_sq.sqrt(),
            y: (1.0 - x_sq).sqrt(),
            phase_t: 0.0,
            phase_r: 0.0,
        })
    }

    pub fn optimal() -> Self {
        let (x_sq, _) = crate::design::optimal_splitting_ratio();
        Self::lossless(x_sq).expect("optimal ratio is in range")
    }

    pub fn with_phases(mut self, phase_t: f64, phase_r: f64) -> Self {
        self.phase_t = phase_t;
        self.phase_r = phase_r;
        self
    }

    pub fn transmitted_matrix(&self) -> JonesMatrix {
        JonesMatrix::diagonal(
            Complex64::new(self.y, 0.0),
            Complex64::from_polar(self.x, self.phase_t),
        )
    }

    pub fn reflected_matrix(&self) -> JonesMatrix {
        JonesMatrix::diagonal(
            Complex64::new(self.x, 0.0),
            Complex64::from_polar(self.y, self.phase_r),
        )
    }
}

/// Returns `(transmitted, reflected)`.
pub fn ppbs_split(v: &JonesVector, p: &PpbsSpec) -> (JonesVector, JonesVector) {
    (
        p.transmitted_matrix().apply(v),
        p.reflected_matrix().apply(v),
    )
}

/// Two-output analyzer projecting onto `(cos θ, e^{iφ} sin θ)` and its
/// orthogonal complement `(−e^{−iφ} sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSpec {
    pub theta: f64,
    pub phi: f64,
}

impl AnalyzerSpec {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// ±45° linear basis.
    pub const fn diagonal() -> Self {
        Self::new(FRAC_PI_4, 0.0)
    }

    /// Circular basis.
    pub const fn circular() -> Self {
        Self::new(FRAC_PI_4, FRAC_PI_2)
    }

    pub fn plus_state(&self) -> JonesVector {
        let (s, c) = self.theta.sin_cos();
        JonesVector::new(c.into(), Complex64::from_polar(s, self.phi))
    }

    pub fn minus_state(&self) -> JonesVector {
        let (s, c) = self.theta.sin_cos();
        JonesVector::new(-Complex64::from_polar(s, -self.phi), c.into())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.theta) || !(self.phi > -PI && self.phi <= PI) {
            return Err(PolError::InvalidParameter(format!(
                "analyzer angles theta = {}, phi = {} out of range",
                self.theta, self.phi
            )));
        }
        Ok(())
    }
}

/// Intensities at the `+` and `−` outputs of the analyzer.
pub fn analyzer_intensities(v: &JonesVector, a: &AnalyzerSpec) -> (f64, f64) {
    (
        a.plus_state().inner(v).norm_sqr(),
        a.minus_state().inner(v).norm_sqr(),
    )
}
