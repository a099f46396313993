//! Robust distributed beamforming for two-hop amplify-and-forward relay
//! networks.
//!
//! The crate implements the low-rank cross-correlation robust distributed
//! beamformer (LRCC-RDB) together with a perfect-CSI and a non-robust
//! baseline, the MSE-bound analysis that accompanies it, and a deterministic
//! Monte Carlo harness that regenerates the standard experiment set
//! (mismatch sweep, power sweep, incoherent interferers, snapshot
//! trajectories, principal-component selection, MSE bounds, complexity).
//!
//! Module layout follows the signal chain:
//!
//! - [`spectral`]: Hermitian eigen-analysis, principal-count selection and
//!   subspace projectors.
//! - [`channel`]: relay geometry, path loss, shadowing, Rayleigh channels and
//!   the mismatched observations.
//! - [`signals`]: source symbols, relay/destination chain, second-order
//!   moments and output SINR.
//! - [`estimator`]: the LRCC-RDB recursion and both baselines.
//! - [`analysis`]: MSE bounds, the subspace-processing MSE and the MMSE/SINR
//!   relation.
//! - [`harness`]: scenario configs, experiment drivers and CSV emission.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod random;
pub mod signals;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
