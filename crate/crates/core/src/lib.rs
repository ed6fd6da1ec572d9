//! Numerical lab for the I-MMSE relationship under interference.
//!
//! The channel model is `y(γ) = √(γ·a·snr2)·z + √(γ·snr1)·x + n`, where `x` is a
//! codeword from a capacity-achieving code, `z` the interfering input and `n`
//! standard Gaussian noise. Modules cover closed-form Gaussian analytics,
//! Gaussian KL divergences, Monte Carlo and quadrature estimators, and
//! multi-user rate region corner points. All information quantities are in
//! nats.

pub mod analytics;
pub mod error;
pub mod estimator;
pub mod kl;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod rates;

pub use error::{LabError, Result};
pub use model::{ChannelParams, CovMatrix};
