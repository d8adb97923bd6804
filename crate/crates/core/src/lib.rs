//! Near-field line-of-sight MIMO channel synthesis and wavefront channel
//! estimation.
//!
//! The crate is organised around the receive-array pose relative to a
//! transmit array centred at the origin:
//!
//! - [`geometry`] builds antenna positions and the exact spherical-wavefront
//!   channel tensor.
//! - [`wavefront`] expands the wavefront phase as a multivariate polynomial of
//!   the antenna and frequency indices.
//! - [`ppe`] estimates those polynomial coefficients from noisy observations
//!   by lattice differencing and weighted circular averaging.
//! - [`mle`] is the geometric-parameter maximum-likelihood baseline.
//! - [`sim`] drives Monte Carlo experiments and computes MSE and CRB figures.
//!
//! All tensors share the index order `(n_rx, n_ry, n_tx, n_ty, n_f)` in
//! row-major layout; see [`lattice`].

pub mod basis;
pub mod geometry;
pub mod lattice;
pub mod mle;
pub mod ppe;
pub mod presets;
pub mod sim;
pub mod wavefront;

mod error;

pub use error::{Error, Result};
pub use geometry::{AmplitudeMode, ArraySpec, ArrayTopology, Pose, Shell, ShellMeasure};
pub use lattice::{ChannelTensor, MultiIndex, Shape, RANK};
pub use wavefront::{DegreeSet, PolyPhaseModel};

/// Converts a linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts decibels to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
