//! Simulation and data reduction for a four-detector, division-of-amplitude
//! photon-counting polarimeter whose detectors realize a tetrahedron
//! measurement on the Poincaré sphere.
//!
//! The crate covers the optical forward model (Jones calculus), the
//! instrument matrix and its optimal design, Poisson photon-count
//! simulation, calibration from a tetrahedral quartet of known states, and
//! Stokes reconstruction with propagated counting uncertainties. The
//! [`cli`] module backs the `polcli` binary.

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod design;
pub mod error;
pub mod instrument;
pub mod optics;
pub mod polarization;

pub use calibration::{
    calibrate, calibration_quartet, fidelity_to_pure_target, reconstruct,
    reconstruction_uncertainty, CalibrationRecord, CalibrationResult, ReconstructionResult,
};
pub use design::{determinant_at, maximize_determinant, optimal_splitting_ratio};
pub use error::{PolError, Result};
pub use instrument::{
    detector_intensities, effective_frame, expected_counts, instrument_matrix_from_frame,
    simulate_counts, CountVector, InstrumentMatrix, PolarimeterModel, Readings, TetrahedronFrame,
};
pub use optics::{
    analyzer_intensities, generate_state, ppbs_split, waveplate_matrix, AnalyzerSpec, JonesMatrix,
    PpbsSpec, WaveplateSpec,
};
pub use polarization::{
    degree_of_polarization, fidelity, fidelity_pure, jones_to_stokes, stokes_to_coherency,
    CoherencyMatrix, JonesVector, ReducedStokes, StokesVector,
};
