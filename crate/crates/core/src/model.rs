//! Channel parametrization of the interfered-with output
//! `y(γ) = sqrt(γ·a·snr2)·z + sqrt(γ·snr1)·x + n`, the γ ↦ γ′ change of
//! variables, and the incremental-channel decomposition of one SNR step.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{ensure_nonneg, ensure_positive, LabError, Result};
use crate::linalg::{self, asymmetry};

/// SNR/gain triple of the interference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    snr1: f64,
    snr2: f64,
    a: f64,
}

impl ChannelParams {
    pub fn new(snr1: f64, snr2: f64, a: f64) -> Result<Self> {
        for (value, name) in [(snr1, "snr1"), (snr2, "snr2"), (a, "a")] {
            ensure_nonneg(value, name)?;
            if !value.is_finite() {
                return Err(LabError::NonFinite(name));
            }
        }
        Ok(Self { snr1, snr2, a })
    }

    pub fn snr1(&self) -> f64 {
        self.snr1
    }

    pub fn snr2(&self) -> f64 {
        self.snr2
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Effective interference SNR `a·snr2`.
    pub fn interference_snr(&self) -> f64 {
        self.a * self.snr2
    }

    /// `α = snr1 / (a·snr2)`; undefined without an interference path.
    pub fn alpha(&self) -> Result<f64> {
        let g = self.interference_snr();
        if g > 0.0 {
            Ok(self.snr1 / g)
        } else {
            Err(LabError::Domain("alpha = snr1/(a*snr2) is undefined when a*snr2 = 0".into()))
        }
    }

    /// Upper end of the admissible SNR interval `[0, a·snr2/(1+snr1)]` of the
    /// transformed channel.
    pub fn admissible_upper(&self) -> f64 {
        self.interference_snr() / (1.0 + self.snr1)
    }

    /// Supremum of γ′ over γ ≥ 0: `a·snr2/snr1` (infinite when snr1 = 0).
    pub fn gamma_prime_supremum(&self) -> f64 {
        if self.snr1 > 0.0 {
            self.interference_snr() / self.snr1
        } else if self.interference_snr() > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// A point γ together with its image γ′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoint {
    pub gamma: f64,
    pub gamma_prime: f64,
}

impl GammaPoint {
    pub fn new(params: &ChannelParams, gamma: f64) -> Result<Self> {
        Ok(Self { gamma, gamma_prime: gamma_prime(params, gamma)? })
    }
}

/// `γ′ = γ·a·snr2 / (1 + γ·snr1)`. An infinite γ returns the supremum.
pub fn gamma_prime(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    if gamma.is_infinite() {
        return Ok(params.gamma_prime_supremum());
    }
    Ok(gamma * params.interference_snr() / (1.0 + gamma * params.snr1))
}

/// `dγ′/dγ = a·snr2 / (1 + γ·snr1)²`.
pub fn d_gamma_prime(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    let denom = 1.0 + gamma * params.snr1;
    Ok(params.interference_snr() / (denom * denom))
}

/// Noise split of one increment `snr → snr + δ` of the transformed channel.
///
/// With `y_{snr+δ} = z + √α·x + σ₁·n₁` and `y_snr = y_{snr+δ} + σ₂·n₂`,
/// `z → y_{snr+δ} → y_snr` is a Markov chain, and the composite noise
/// `n̂ = (δσ₁n₁ − snr·σ₂n₂)/√δ` has per-component variance `var_nhat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementalDecomposition {
    pub snr: f64,
    pub delta: f64,
    pub alpha: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub var_nhat: f64,
}

impl IncrementalDecomposition {
    /// `snr/δ`, the weight of `n₂` in the second incremental observation.
    pub fn snr_over_delta(&self) -> f64 {
        self.snr / self.delta
    }

    /// Closed-form value of the composite-noise variance, `1 − δα`.
    pub fn var_nhat_identity(&self) -> f64 {
        1.0 - self.delta * self.alpha
    }
}

/// Builds the decomposition of the increment `snr → snr + δ`.
///
/// Requires `snr > 0`, `δ > 0` and `snr + δ ≤ a·snr2/(1+snr1)` (closed
/// interval). `σ₂²` uses the cancellation-free form `δ/(snr(snr+δ))`, which
/// equals `(1/snr − α) − σ₁²`; `var_nhat` is summed from the two noise
/// contributions, never taken from the `1 − δα` identity.
pub fn incremental_decomposition(
    params: &ChannelParams,
    snr: f64,
    delta: f64,
) -> Result<IncrementalDecomposition> {
    ensure_positive(snr, "snr")?;
    ensure_positive(delta, "delta")?;
    let alpha = params.alpha()?;
    let upper = params.admissible_upper();
    let top = snr + delta;
    if top > upper * (1.0 + 4.0 * f64::EPSILON) {
        return Err(LabError::Range { name: "snr + delta", value: top, lo: 0.0, hi: upper });
    }
    let sigma1_sq = 1.0 / top - alpha;
    let sigma2_sq = delta / (snr * top);
    let var_nhat = delta * sigma1_sq + (snr * snr / delta) * sigma2_sq;
    Ok(IncrementalDecomposition { snr, delta, alpha, sigma1_sq, sigma2_sq, var_nhat })
}

/// Symmetric, positive semi-definite (up to round-off) covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(LabError::Dimension { expected: m.nrows(), got: m.ncols() });
        }
        let scale = m.amax().max(1.0);
        if asymmetry(&m) > Self::SYMMETRY_TOL * scale {
            return Err(LabError::Domain("covariance matrix is not symmetric".into()));
        }
        let sym = linalg::symmetrize(&m);
        let min = linalg::sym_eigen(&sym)?.min_value();
        if min < -Self::PSD_TOL * scale {
            return Err(LabError::Domain(format!("covariance matrix has negative eigenvalue {min:e}")));
        }
        Ok(Self(sym))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::sym_eigenvalues(&self.0)
    }

    /// `max_i |λ_i − 1|`, the distance of the spectrum from that of `I`.
    pub fn spectral_deviation(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().fold(0.0_f64, |acc, l| acc.max((l - 1.0).abs())))
    }
}

/// Cross-covariance `B = E[y₂y₁ᵀ] = α(Cov_x − I)` of the two incremental
/// observations.
///
/// Uses the noise weights `(σ₁n₁ − (snr/δ)σ₂n₂)` for the second observation;
/// with those weights the noise cross terms cancel to `−αI` exactly.
pub fn cross_correlation_b(cov_x: &CovMatrix, alpha: f64) -> Result<DMatrix<f64>> {
    ensure_nonneg(alpha, "alpha")?;
    let n = cov_x.dim();
    Ok((cov_x.matrix() - DMatrix::<f64>::identity(n, n)) * alpha)
}
