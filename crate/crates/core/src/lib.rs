//! Blind estimation of per-base-station transmit powers in a multi-cell OFDM
//! downlink.
//!
//! The receiver sees `Y = H P^{1/2} Θ + σ N` over `N` subcarriers and `L`
//! OFDM symbols. The eigenvalue moments of `(1/L) Y Yᴴ` are free-deconvolved
//! into the moments of `H P Hᴴ`, which are then inverted into powers through
//! closed-form moment formulas and a grid MMSE / ML / zero-forcing estimator.
//!
//! Module map:
//! - [`sim`]: synthetic downlink (channels, symbols, noise, ground truth).
//! - [`spectral`]: empirical Gram-matrix moments and their accumulation.
//! - [`freeprob`]: moment/free-cumulant calculus, Marchenko-Pastur law and
//!   the deconvolution pipeline.
//! - [`theory`]: theoretical moments of `H P Hᴴ`, symmetric-polynomial
//!   conversions and the moment-noise covariance.
//! - [`estimators`]: MMSE, ML, zero-forcing, classical and iterative power
//!   estimators.

pub mod error;
pub mod estimators;
pub mod freeprob;
pub mod scenario_file;
pub mod seed;
pub mod sim;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, Method, PowerEstimate, PowerGrid, Prior};
pub use freeprob::{mp_density, mp_moments, recover_hph_moments, CumulantVector, MarchenkoPastur};
pub use sim::{
    Alphabet, ChannelModel, ChannelRealization, LtePreset, NetworkScenario, ReceivedBlock,
};
pub use spectral::MomentVector;
pub use theory::{CovarianceMethod, NoiseCovariance};

/// Largest moment order the deconvolution pipeline accepts.
pub const MAX_MOMENTS: usize = 12;
