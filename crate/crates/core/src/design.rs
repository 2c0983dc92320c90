//! Choice of the PPBS splitting ratio.
//!
//! With the transmitted arm analyzed in a basis `(θ, φ)` and the reflected
//! arm in `(θ', φ')`, the instrument matrix depends on the intensity
//! splitting ratio `x²` only. The optimal ratio makes the detection frame a
//! regular tetrahedron, which is also where `|det B|` peaks.

use crate::error::{PolError, Result};
use crate::instrument::PolarimeterModel;
use crate::optics::{AnalyzerSpec, PpbsSpec};

/// Closed-form optimum `(x², y²) = (1/2 + 1/(2√3), 1/2 − 1/(2√3))`.
pub fn optimal_splitting_ratio() -> (f64, f64) {
    let half_gap = 0.5 / 3f64.sqrt();
    (0.5 + half_gap, 0.5 - half_gap)
}

/// `|det B|` of a lossless device with unit efficiencies and splitting ratio
/// `x_sq`.
pub fn determinant_at(x_sq: f64, basis_t: &AnalyzerSpec, basis_r: &AnalyzerSpec) -> Result<f64> {
    let mut m = PolarimeterModel::with_ppbs(PpbsSpec::lossless(x_sq)?);
    m.analyzer_t = *basis_t;
    m.analyzer_r = *basis_r;
    Ok(m.response_matrix().determinant().abs())
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the splitting ratio maximizing `|det B|` on
/// `[0.5, 1]`. Returns the midpoint of the final bracket, whose width is
/// below `tolerance`.
pub fn maximize_determinant(
    basis_t: &AnalyzerSpec,
    basis_r: &AnalyzerSpec,
    tolerance: f64,
) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(PolError::InvalidParameter(format!(
            "tolerance must be positive (got {tolerance})"
        )));
    }
    let f = |u: f64| determinant_at(u, basis_t, basis_r);
    let (mut lo, mut hi) = (0.5, 1.0);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tolerance {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (lo + hi))
}
