//! Finite-blocklength estimation: random codebooks, Bayes-optimal estimates
//! over AWGN, MMSE and mutual information by quadrature and Monte Carlo, and
//! the codebook experiments.
//!
//! Monte Carlo runs are split into fixed chunks of [`CHUNK_SIZE`] samples, each
//! with its own ChaCha stream, and merged in chunk order, so estimates are
//! bit-identical for any rayon thread count.

mod codebook;
mod experiments;
mod mc;
mod scalar;
mod verify;

pub use codebook::{
    codebook_size, conditional_mean, generate_codebook, generate_codebook_of_size, posterior_weights,
    Codebook, MAX_CODEWORDS, POWER_SLACK,
};
pub use experiments::{
    diagonal_covariance_codebook, eigen_convergence_experiment, independence_bound_experiment,
    independence_trend, proxy_rate, truncate, truncation_probability_mc, EigenConvergenceRow,
    IndependenceRow,
};
pub use mc::{
    d_mi_codebook_mc, default_step, immse_gap_mc, mi_codebook_mc, mmse_codebook_mc, mmse_matrix_mc,
    McEstimate, MmseMatrixEstimate, CHUNK_SIZE, MIN_SAMPLES,
};
pub use scalar::{mi_scalar_quadrature, mmse_scalar_quadrature, Constellation};
pub use verify::{verify_immse, ImmseInput, ImmseRow};
