use nalgebra::DMatrix;
use serde::Serialize;

use super::codebook::{codebook_size, generate_codebook, Codebook};
use super::mc::{mc_mean, normal_vec, McEstimate};
use crate::error::{ensure_nonneg, ensure_positive, LabError, Result};
use crate::kl::{kl_block_independent, BlockGaussianPair};
use crate::model::{incremental_decomposition, ChannelParams};

/// Good-code proxy rate: `fraction · ½ ln(1 + snr1)`.
pub fn proxy_rate(snr1: f64, rate_fraction: f64) -> Result<f64> {
    ensure_nonneg(snr1, "snr1")?;
    if !(rate_fraction > 0.0 && rate_fraction <= 1.0) {
        return Err(LabError::Range { name: "rate_fraction", value: rate_fraction, lo: 0.0, hi: 1.0 });
    }
    Ok(rate_fraction * 0.5 * snr1.ln_1p())
}

/// Spectral deviation of random codebook covariances at one blocklength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenConvergenceRow {
    pub n: usize,
    pub codewords: usize,
    /// Mean of `max_i |λᵢ(Ĉov) − 1|` over seeds.
    pub mean_deviation: f64,
    pub min_deviation: f64,
    pub max_deviation: f64,
    pub seeds: usize,
}

/// For each n, generates one codebook per seed at the proxy rate and averages
/// the spectral deviation of its covariance.
pub fn eigen_convergence_experiment(
    snr1: f64,
    rate_fraction: f64,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<Vec<EigenConvergenceRow>> {
    let rate = proxy_rate(snr1, rate_fraction)?;
    if seeds.is_empty() {
        return Err(LabError::Domain("at least one seed is required".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let codewords = codebook_size(n, rate)?;
            let devs = seeds
                .iter()
                .map(|&s| generate_codebook(n, rate, s)?.covariance()?.spectral_deviation())
                .collect::<Result<Vec<_>>>()?;
            Ok(EigenConvergenceRow {
                n,
                codewords,
                mean_deviation: devs.iter().sum::<f64>() / devs.len() as f64,
                min_deviation: devs.iter().copied().fold(f64::INFINITY, f64::min),
                max_deviation: devs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                seeds: seeds.len(),
            })
        })
        .collect()
}

/// Gaussian-surrogate `(1/n)·I(y₁; y₂)` of the incremental pair built from the
/// codebook's covariance.
pub fn independence_bound_experiment(
    params: &ChannelParams,
    snr: f64,
    delta: f64,
    cb: &Codebook,
) -> Result<f64> {
    let d = incremental_decomposition(params, snr, delta)?;
    let pair = BlockGaussianPair::incremental(&cb.covariance()?, &d)?;
    Ok(kl_block_independent(&pair)? / cb.n() as f64)
}

/// Surrogate mutual information at one blocklength, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceRow {
    pub n: usize,
    pub codewords: usize,
    pub mean_surrogate_mi: f64,
    pub mean_deviation: f64,
    pub seeds: usize,
}

/// Runs [`independence_bound_experiment`] on the same proxy codebooks as
/// [`eigen_convergence_experiment`].
pub fn independence_trend(
    params: &ChannelParams,
    snr: f64,
    delta: f64,
    rate_fraction: f64,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<Vec<IndependenceRow>> {
    let rate = proxy_rate(params.snr1(), rate_fraction)?;
    if seeds.is_empty() {
        return Err(LabError::Domain("at least one seed is required".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let mut mi = 0.0;
            let mut dev = 0.0;
            for &s in seeds {
                let cb = generate_codebook(n, rate, s)?;
                mi += independence_bound_experiment(params, snr, delta, &cb)?;
                dev += cb.covariance()?.spectral_deviation()?;
            }
            let k = seeds.len() as f64;
            Ok(IndependenceRow {
                n,
                codewords: codebook_size(n, rate)?,
                mean_surrogate_mi: mi / k,
                mean_deviation: dev / k,
                seeds: seeds.len(),
            })
        })
        .collect()
}

/// Clips every component with `|zᵢ| ≥ κ` to `κ` and reports whether no
/// component was clipped.
pub fn truncate(z: &[f64], kappa: f64) -> Result<(Vec<f64>, bool)> {
    ensure_positive(kappa, "kappa")?;
    let mut untouched = true;
    let clipped = z
        .iter()
        .map(|&v| {
            if v.abs() < kappa {
                v
            } else {
                untouched = false;
                kappa
            }
        })
        .collect();
    Ok((clipped, untouched))
}

/// Monte Carlo `P(s = 1)` for an i.i.d. standard normal vector of length n.
pub fn truncation_probability_mc(n: usize, kappa: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    ensure_positive(kappa, "kappa")?;
    if n == 0 {
        return Err(LabError::Domain("dimension must be at least 1".into()));
    }
    mc_mean(samples, seed, |rng| {
        let z = normal_vec(rng, n);
        Ok(if truncate(&z, kappa)?.1 { 1.0 } else { 0.0 })
    })
}

/// Codebook whose covariance is `diag(values)` exactly: all `2ⁿ` sign
/// patterns `(±√v₁, …, ±√vₙ)`. Each codeword has power `mean(values)`.
pub fn diagonal_covariance_codebook(values: &[f64]) -> Result<Codebook> {
    let n = values.len();
    if n == 0 || n > 16 {
        return Err(LabError::Domain(format!("sign codebook needs 1 <= n <= 16, got {n}")));
    }
    for &v in values {
        ensure_nonneg(v, "variance")?;
    }
    let m = 1usize << n;
    let words = DMatrix::from_fn(m, n, |r, c| {
        let sign = if (r >> c) & 1 == 1 { -1.0 } else { 1.0 };
        sign * values[c].sqrt()
    });
    Codebook::new(&words)
}
