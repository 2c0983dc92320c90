//! Polarization state representations: Stokes vectors, Jones vectors and
//! coherency matrices, with conversions and state fidelity.
//!
//! Axis convention used throughout the crate:
//!
//! * axis 1 (`s_x`): horizontal (+) / vertical (−) linear,
//! * axis 2 (`s_y`): +45° (+) / −45° (−) linear,
//! * axis 3 (`s_z`): right (+) / left (−) circular, where `s_z = +1`
//!   corresponds to the Jones vector `(1, i)/√2`.
//!
//! In Jones terms `s_x = |α|² − |β|²`, `s_y = 2 Re(α*β)` and
//! `s_z = 2 Im(α*β)`, which makes the coherency matrix
//! `ρ = ½(1 + r_x σ₃ + r_y σ₁ + r_z σ₂)` in the usual Pauli labelling.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{PolError, Result};

/// Tolerance on the degree of polarization for a state to count as pure.
pub const PURITY_TOLERANCE: f64 = 1e-6;
/// Hermiticity and trace tolerance for coherency matrices.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted for a positive semidefinite matrix.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Intensity plus polarization 4-vector `(s_m, s_x, s_y, s_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s_m: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub s_z: f64,
}

impl StokesVector {
    pub const fn new(s_m: f64, s_x: f64, s_y: f64, s_z: f64) -> Self {
        Self { s_m, s_x, s_y, s_z }
    }

    /// Unit-intensity state with the given reduced vector.
    pub fn from_reduced(r: ReducedStokes) -> Self {
        Self::new(1.0, r.r_x, r.r_y, r.r_z)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s_m, self.s_x, self.s_y, self.s_z]
    }

    /// Length of the polarization part `√(s_x² + s_y² + s_z²)`.
    pub fn polarized_intensity(&self) -> f64 {
        (self.s_x * self.s_x + self.s_y * self.s_y + self.s_z * self.s_z).sqrt()
    }

    /// `(1, s_x/s_m, s_y/s_m, s_z/s_m)`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.s_m > 0.0) {
            return Err(PolError::ZeroIntensity(self.s_m));
        }
        Ok(Self::new(
            1.0,
            self.s_x / self.s_m,
            self.s_y / self.s_m,
            self.s_z / self.s_m,
        ))
    }

    pub fn reduced(&self) -> Result<ReducedStokes> {
        let n = self.normalized()?;
        Ok(ReducedStokes::new(n.s_x, n.s_y, n.s_z))
    }

    pub fn degree_of_polarization(&self) -> Result<f64> {
        degree_of_polarization(self)
    }

    /// True when `s_m ≥ 0` and the degree of polarization does not exceed one
    /// by more than `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.s_m >= 0.0 && self.polarized_intensity() <= self.s_m * (1.0 + tol)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.s_m * other.s_m + self.s_x * other.s_x + self.s_y * other.s_y + self.s_z * other.s_z
    }
}

/// Point in (or on) the Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedStokes {
    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
}

impl ReducedStokes {
    pub const fn new(r_x: f64, r_y: f64, r_z: f64) -> Self {
        Self { r_x, r_y, r_z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r_x, self.r_y, self.r_z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.r_x * other.r_x + self.r_y * other.r_y + self.r_z * other.r_z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.r_x * k, self.r_y * k, self.r_z * k)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.r_x - other.r_x, self.r_y - other.r_y, self.r_z - other.r_z)
    }

    /// Radial projection onto the closed unit ball; identity inside it.
    pub fn clip_to_unit_ball(&self) -> Self {
        let n = self.norm();
        if n > 1.0 {
            self.scale(1.0 / n)
        } else {
            *self
        }
    }

    /// Radial projection onto the unit sphere. `None` for the origin, which
    /// has no direction.
    pub fn to_unit_sphere(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }
}

/// Pair of complex field amplitudes in the (H, V) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl JonesVector {
    pub const fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn real(alpha: f64, beta: f64) -> Self {
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
    }

    pub fn horizontal() -> Self {
        Self::real(1.0, 0.0)
    }

    pub fn vertical() -> Self {
        Self::real(0.0, 1.0)
    }

    /// Pure state with the given unit reduced Stokes vector (the vector is
    /// normalized first if needed).
    pub fn from_reduced(r: ReducedStokes) -> Self {
        let n = r.norm();
        let (x, y, z) = if n > 0.0 {
            (r.r_x / n, r.r_y / n, r.r_z / n)
        } else {
            (1.0, 0.0, 0.0)
        };
        // Polar angle measured from +s_x, azimuth in the (s_y, s_z) plane.
        let a = ((1.0 + x) / 2.0).max(0.0).sqrt();
        let b = ((1.0 - x) / 2.0).max(0.0).sqrt();
        let phase = z.atan2(y);
        Self::new(Complex64::new(a, 0.0), Complex64::from_polar(b, phase))
    }

    pub fn intensity(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let i = self.intensity();
        if !(i > 0.0) {
            return Err(PolError::ZeroIntensity(i));
        }
        let k = 1.0 / i.sqrt();
        Ok(Self::new(self.alpha * k, self.beta * k))
    }

    pub fn with_global_phase(&self, gamma: f64) -> Self {
        let p = Complex64::from_polar(1.0, gamma);
        Self::new(self.alpha * p, self.beta * p)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// The orthogonal state `(−β*, α*)`; antipodal on the Poincaré sphere.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.beta.conj(), self.alpha.conj())
    }

    pub fn to_stokes(&self) -> StokesVector {
        jones_to_stokes(self)
    }

    /// Projector `|v⟩⟨v|` (unnormalized when `v` is).
    pub fn outer(&self) -> Matrix2<Complex64> {
        let a = self.alpha;
        let b = self.beta;
        Matrix2::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        )
    }
}

/// 2×2 coherency (density) matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyMatrix(pub Matrix2<Complex64>);

impl CoherencyMatrix {
    /// Wraps a matrix after checking it is a normalized, positive
    /// semidefinite Hermitian matrix.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let c = Self(m);
        c.validate()?;
        Ok(c)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]
    }

    /// Eigenvalues in ascending order, from the Hermitian part of the matrix.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = (self.0[(0, 1)] + self.0[(1, 0)].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        let skew = [
            m[(0, 0)].im.abs(),
            m[(1, 1)].im.abs(),
            (m[(0, 1)] - m[(1, 0)].conj()).norm(),
        ];
        if skew.iter().any(|&e| !(e <= HERMITIAN_TOLERANCE)) {
            return Err(PolError::NotAState(format!("not Hermitian ({skew:?})")));
        }
        let tr = self.trace().re;
        if !((tr - 1.0).abs() <= HERMITIAN_TOLERANCE) {
            return Err(PolError::NotAState(format!("trace {tr}")));
        }
        let [low, _] = self.eigenvalues();
        if low < EIGENVALUE_FLOOR {
            return Err(PolError::NotAState(format!("negative eigenvalue {low}")));
        }
        Ok(())
    }

    /// Stokes vector of the matrix (unit intensity for a normalized matrix).
    pub fn to_stokes(&self) -> StokesVector {
        let m = &self.0;
        let off = m[(1, 0)];
        StokesVector::new(
            (m[(0, 0)] + m[(1, 1)]).re,
            (m[(0, 0)] - m[(1, 1)]).re,
            2.0 * off.re,
            2.0 * off.im,
        )
    }
}

pub fn jones_to_stokes(v: &JonesVector) -> StokesVector {
    let a2 = v.alpha.norm_sqr();
    let b2 = v.beta.norm_sqr();
    let cross = v.alpha.conj() * v.beta;
    StokesVector::new(a2 + b2, a2 - b2, 2.0 * cross.re, 2.0 * cross.im)
}

pub fn stokes_to_coherency(s: &StokesVector) -> Result<CoherencyMatrix> {
    let r = s.reduced()?;
    let half = 0.5;
    let m = Matrix2::new(
        Complex64::new(half * (1.0 + r.r_x), 0.0),
        Complex64::new(half * r.r_y, -half * r.r_z),
        Complex64::new(half * r.r_y, half * r.r_z),
        Complex64::new(half * (1.0 - r.r_x), 0.0),
    );
    Ok(CoherencyMatrix(m))
}

pub fn degree_of_polarization(s: &StokesVector) -> Result<f64> {
    if !(s.s_m > 0.0) {
        return Err(PolError::ZeroIntensity(s.s_m));
    }
    Ok(s.polarized_intensity() / s.s_m)
}

/// Uhlmann fidelity of two qubit states, evaluated with the 2×2 closed form
/// `Tr(σρ) + 2√(det σ · det ρ)`.
pub fn fidelity(a: &CoherencyMatrix, b: &CoherencyMatrix) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let overlap = (a.0 * b.0).trace().re;
    let dets = a.determinant().re.max(0.0) * b.determinant().re.max(0.0);
    Ok((overlap + 2.0 * dets.sqrt()).clamp(0.0, 1.0))
}

/// Fidelity of two pure states from the overlap of their normalized Stokes
/// vectors, `(1 + r_a·r_b)/2`.
pub fn fidelity_pure(rec: &StokesVector, th: &StokesVector) -> Result<f64> {
    let ra = pure_reduced(rec)?;
    let rb = pure_reduced(th)?;
    Ok((0.5 * (1.0 + ra.dot(&rb))).clamp(0.0, 1.0))
}

fn pure_reduced(s: &StokesVector) -> Result<ReducedStokes> {
    let r = s.reduced()?;
    let dop = r.norm();
    if (dop - 1.0).abs() > PURITY_TOLERANCE {
        return Err(PolError::NotPure(dop));
    }
    Ok(r)
}
