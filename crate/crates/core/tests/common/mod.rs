//! Shared helpers and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use tetrapol::{
    calibrate, calibration_quartet, expected_counts, CalibrationRecord, CalibrationResult,
    CoherencyMatrix, JonesVector, PolarimeterModel, ReducedStokes, StokesVector,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random pure state with a random intensity in `[0.1, 10)`.
pub fn random_jones(rng: &mut ChaCha8Rng) -> JonesVector {
    let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let v = JonesVector::new(Complex64::new(g[0], g[1]), Complex64::new(g[2], g[3]));
    let scale = (rng.random_range(0.1..10.0) / v.intensity()).sqrt();
    JonesVector::new(v.alpha * scale, v.beta * scale)
}

pub fn random_direction(rng: &mut ChaCha8Rng) -> ReducedStokes {
    loop {
        let g: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n > 1e-6 {
            return ReducedStokes::new(g[0] / n, g[1] / n, g[2] / n);
        }
    }
}

/// Unit-intensity pure Stokes vector.
pub fn random_pure(rng: &mut ChaCha8Rng) -> StokesVector {
    StokesVector::from_reduced(random_direction(rng))
}

/// Mixed state with degree of polarization uniform in `[0, 0.999)` and
/// intensity in `[0.5, 2)`.
pub fn random_mixed(rng: &mut ChaCha8Rng) -> StokesVector {
    let r = random_direction(rng).scale(rng.random_range(0.0..0.999));
    let s_m = rng.random_range(0.5..2.0);
    StokesVector::new(s_m, s_m * r.r_x, s_m * r.r_y, s_m * r.r_z)
}

/// Coherency matrix built directly from the Pauli expansion
/// `½(S_m·I + S_x·σ_z + S_y·σ_x + S_z·σ_y)`.
pub fn coherency_oracle(s: &StokesVector) -> Matrix2<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Matrix2::new(
        c(0.5 * (s.s_m + s.s_x), 0.0),
        c(0.5 * s.s_y, -0.5 * s.s_z),
        c(0.5 * s.s_y, 0.5 * s.s_z),
        c(0.5 * (s.s_m - s.s_x), 0.0),
    )
}

/// Principal square root of a Hermitian positive-semidefinite matrix via
/// its eigendecomposition. Eigenvalues below `1e-12·λ_max` are treated as
/// zero (numerical rank cutoff).
pub fn hermitian_sqrt(m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let roots = eig
        .eigenvalues
        .map(|l| if l <= 1e-12 * lmax { 0.0 } else { l.sqrt() });
    let d = Matrix2::from_diagonal(&roots.map(|r| Complex64::new(r, 0.0)));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `(Tr √(√ρ σ √ρ))²` for unit-trace normalized inputs.
pub fn sqrt_fidelity(rho: &Matrix2<Complex64>, sigma: &Matrix2<Complex64>) -> f64 {
    let rho = rho / rho.trace();
    let sigma = sigma / sigma.trace();
    let sr = hermitian_sqrt(&rho);
    let inner = sr * sigma * sr;
    let inner = (inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let t = hermitian_sqrt(&inner).trace().re;
    t * t
}

pub fn coherency(s: &StokesVector) -> CoherencyMatrix {
    tetrapol::stokes_to_coherency(s).unwrap()
}

/// Ideal frame vectors in detector order.
pub fn ideal_frame() -> [[f64; 3]; 4] {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    [[-a, b, 0.0], [-a, -b, 0.0], [a, 0.0, b], [a, 0.0, -b]]
}

/// Intensities of the lossless device written out by hand: the transmitted
/// arm `(yα, xβ)` analyzed in the diagonal basis, the reflected arm
/// `(xα, yβ)` analyzed in the circular basis.
pub fn hand_intensities(v: &JonesVector, x_sq: f64) -> [f64; 4] {
    let (x, y) = (x_sq.sqrt(), (1.0 - x_sq).sqrt());
    let i = Complex64::i();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (ta, tb) = (v.alpha * y, v.beta * x);
    let (ra, rb) = (v.alpha * x, v.beta * y);
    [
        ((ta + tb) * h).norm_sqr(),
        ((tb - ta) * h).norm_sqr(),
        ((ra - i * rb) * h).norm_sqr(),
        ((rb - i * ra) * h).norm_sqr(),
    ]
}

/// Instrument matrix of the lossless device, recovered by probing it with
/// H, V, diagonal and right-circular light: `B = I_probe · S_probe⁻¹`.
pub fn probed_instrument(x_sq: f64) -> Matrix4<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let probes = [
        JonesVector::real(1.0, 0.0),
        JonesVector::real(0.0, 1.0),
        JonesVector::real(h, h),
        JonesVector::new(Complex64::new(h, 0.0), Complex64::new(0.0, h)),
    ];
    let s = Matrix4::from_columns(&[
        Vector4::new(1.0, 1.0, 0.0, 0.0),
        Vector4::new(1.0, -1.0, 0.0, 0.0),
        Vector4::new(1.0, 0.0, 1.0, 0.0),
        Vector4::new(1.0, 0.0, 0.0, 1.0),
    ]);
    let cols: Vec<Vector4<f64>> = probes
        .iter()
        .map(|p| Vector4::from(hand_intensities(p, x_sq)))
        .collect();
    Matrix4::from_columns(&cols) * s.try_inverse().unwrap()
}

/// Quartet calibration from noiseless expected counts, per photon.
pub fn exact_calibration(model: &PolarimeterModel) -> CalibrationResult {
    let records: Vec<_> = calibration_quartet()
        .iter()
        .map(|s| CalibrationRecord::new(*s, expected_counts(s, model, 1e5).unwrap()).unwrap())
        .collect();
    calibrate(&records).unwrap().per_photon(1e5).unwrap()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
