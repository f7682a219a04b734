//! Link-level simulator and analytical toolkit for index-modulated
//! fluid-antenna (IM-FA) transmission over spatially correlated Rayleigh
//! fading.
//!
//! The crate is organized around the processing chain:
//!
//! * [`numerics`] — special functions, quadrature and small linear algebra
//! * [`channel`] — Jakes spatial correlation, fading and noise sampling
//! * [`im`] — index-modulation mapping, QAM constellations, ML detection and
//!   soft demodulation
//! * [`conv`] — recursive systematic convolutional codes: trellis, Viterbi,
//!   weight enumerators
//! * [`turbo`] — parallel-concatenated coding and iterative log-MAP decoding
//! * [`analysis`] — closed-form PEP, union bounds, discrete-input capacity
//!   and EXIT curves
//! * [`sim`] — seeded Monte Carlo BER experiments
//!
//! Core math is generic over the scalar type (any [`Scalar`], i.e. `f32` or
//! `f64`); the simulation and analysis drivers run on [`Real`].

pub mod analysis;
pub mod channel;
pub mod conv;
pub mod im;
pub mod numerics;
pub mod sim;
pub mod turbo;

mod scalar;
pub use scalar::Scalar;

use thiserror::Error;

/// Scalar type used by the concrete simulation/analysis layers and the CLI.
pub type Real = f64;
/// Double-precision quadrature rule.
pub type Quadrature = numerics::QuadratureRule<Real>;
/// Double-precision spatial correlation matrix.
pub type Correlation = channel::CorrelationMatrix<Real>;
/// Double-precision fading realization.
pub type Fading = channel::FadingSample<Real>;
/// Double-precision QAM constellation.
pub type Constellation = im::QamConstellation<Real>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unsupported modulation order {0}")]
    UnsupportedModulation(usize),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
