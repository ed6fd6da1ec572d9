use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::codebook::{conditional_mean, Codebook};
use super::scalar::log_sum_exp;
use crate::error::{ensure_nonneg, LabError, Result};
use crate::model::CovMatrix;

/// Samples per chunk. Fixed so the sample-to-stream assignment does not
/// depend on the thread count.
pub const CHUNK_SIZE: usize = 4096;
pub const MIN_SAMPLES: usize = 100;

/// Monte Carlo estimate with its standard error (sample std / √samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Running mean and centered second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn merge(&mut self, other: &Welford) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count / total;
        self.m2 += other.m2 + d * d * self.count * other.count / total;
        self.count = total;
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.count < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.count - 1.0)).max(0.0).sqrt() / self.count.sqrt()
    }

    pub(crate) fn estimate(&self, samples: usize, seed: u64) -> McEstimate {
        McEstimate { value: self.mean(), std_error: self.std_error(), samples, seed }
    }
}

/// Random stream of one chunk: the master seed picks the key, the chunk
/// index picks the ChaCha stream.
pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `f(rng, count)` over fixed-size chunks in parallel and returns the
/// results in chunk order.
pub(crate) fn map_chunks<T, F>(samples: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            f(&mut chunk_rng(seed, c), count)
        })
        .collect()
}

/// Mean of a per-sample statistic, merged in chunk order.
pub(crate) fn mc_mean<F>(samples: usize, seed: u64, per_sample: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    check_samples(samples)?;
    let parts = map_chunks(samples, seed, |rng, count| {
        let mut w = Welford::default();
        for _ in 0..count {
            w.push(per_sample(rng)?);
        }
        Ok(w)
    });
    let mut total = Welford::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total.estimate(samples, seed))
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(LabError::Domain(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    ensure_nonneg(gamma, "gamma")?;
    if gamma.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonFinite("gamma"))
    }
}

pub(crate) fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws a codeword index and noise, returns `(index, noise)`.
fn draw(cb: &Codebook, rng: &mut ChaCha8Rng) -> (usize, Vec<f64>) {
    let i = rng.random_range(0..cb.size());
    (i, normal_vec(rng, cb.n()))
}

fn error_vector(cb: &Codebook, i: usize, noise: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let x = cb.codeword(i);
    let s = gamma.sqrt();
    let y: Vec<f64> = x.iter().zip(noise).map(|(a, b)| s * a + b).collect();
    let est = conditional_mean(cb, &y, gamma)?;
    Ok(x.iter().zip(est.iter()).map(|(a, b)| a - b).collect())
}

/// Per-dimension MMSE `(1/n)E‖x − E[x|y]‖²` of the codebook at SNR γ.
pub fn mmse_codebook_mc(cb: &Codebook, gamma: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_gamma(gamma)?;
    let n = cb.n() as f64;
    mc_mean(samples, seed, |rng| {
        let (i, noise) = draw(cb, rng);
        let e = error_vector(cb, i, &noise, gamma)?;
        Ok(e.iter().map(|v| v * v).sum::<f64>() / n)
    })
}

/// Monte Carlo MMSE matrix with elementwise standard errors.
#[derive(Debug, Clone)]
pub struct MmseMatrixEstimate {
    pub matrix: CovMatrix,
    pub std_error: DMatrix<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl MmseMatrixEstimate {
    /// Standard-error scale for any unit quadratic form `vᵀÊv`, and so for the
    /// extreme eigenvalues: `Σ|vᵢvⱼ|·seᵢⱼ ≤ ‖se‖_F`.
    pub fn quadratic_form_std_error(&self) -> f64 {
        self.std_error.norm()
    }
}

/// `E[(x − E[x|y])(x − E[x|y])ᵀ]` of the codebook at SNR γ.
pub fn mmse_matrix_mc(cb: &Codebook, gamma: f64, samples: usize, seed: u64) -> Result<MmseMatrixEstimate> {
    check_gamma(gamma)?;
    check_samples(samples)?;
    let n = cb.n();
    let parts = map_chunks(samples, seed, |rng, count| {
        let mut acc = vec![Welford::default(); n * n];
        for _ in 0..count {
            let (i, noise) = draw(cb, rng);
            let e = error_vector(cb, i, &noise, gamma)?;
            for r in 0..n {
                for c in 0..n {
                    acc[r * n + c].push(e[r] * e[c]);
                }
            }
        }
        Ok(acc)
    });
    let mut total = vec![Welford::default(); n * n];
    for p in parts {
        for (t, w) in total.iter_mut().zip(p?) {
            t.merge(&w);
        }
    }
    let matrix = DMatrix::from_fn(n, n, |r, c| total[r * n + c].mean());
    let std_error = DMatrix::from_fn(n, n, |r, c| total[r * n + c].std_error());
    Ok(MmseMatrixEstimate { matrix: CovMatrix::new(matrix)?, std_error, samples, seed })
}

/// Per-sample pieces of `ln p(y|xᵢ)/p(y)`: projections `⟨N, xᵢ − xⱼ⟩` and
/// squared distances `‖xᵢ − xⱼ‖²`.
struct LogRatio {
    proj: Vec<f64>,
    dist2: Vec<f64>,
    ln_m: f64,
}

impl LogRatio {
    fn new(cb: &Codebook, i: usize, noise: &[f64]) -> Self {
        let xi = cb.codeword(i);
        let (proj, dist2) = (0..cb.size())
            .map(|j| {
                let xj = cb.codeword(j);
                xi.iter().zip(xj).zip(noise).fold((0.0, 0.0), |(p, d), ((a, b), z)| {
                    let diff = a - b;
                    (p + z * diff, d + diff * diff)
                })
            })
            .unzip();
        Self { proj, dist2, ln_m: (cb.size() as f64).ln() }
    }

    /// `ln M − ln Σⱼ exp(−√γ⟨N, xᵢ − xⱼ⟩ − γ‖xᵢ − xⱼ‖²/2)`.
    fn at(&self, gamma: f64) -> f64 {
        let s = gamma.sqrt();
        let logs: Vec<f64> =
            self.proj.iter().zip(&self.dist2).map(|(p, d)| -s * p - 0.5 * gamma * d).collect();
        self.ln_m - log_sum_exp(&logs)
    }
}

/// Per-dimension mutual information `(1/n)I(x; √γx + N)` of the codebook.
pub fn mi_codebook_mc(cb: &Codebook, gamma: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_gamma(gamma)?;
    let n = cb.n() as f64;
    mc_mean(samples, seed, |rng| {
        let (i, noise) = draw(cb, rng);
        Ok(LogRatio::new(cb, i, &noise).at(gamma) / n)
    })
}

/// Finite-difference step `1e-3·max(1, γ)`.
pub fn default_step(gamma: f64) -> f64 {
    1e-3 * gamma.max(1.0)
}

/// Finite-difference stencil: central when `γ − h ≥ 0`, second-order
/// forward otherwise.
pub(crate) fn finite_difference(f: impl Fn(f64) -> Result<f64>, gamma: f64, h: f64) -> Result<f64> {
    if gamma - h >= 0.0 {
        Ok((f(gamma + h)? - f(gamma - h)?) / (2.0 * h))
    } else {
        Ok((-3.0 * f(gamma)? + 4.0 * f(gamma + h)? - f(gamma + 2.0 * h)?) / (2.0 * h))
    }
}

/// Per-dimension `dI/dγ` with common random numbers: every sample
/// differences its own log-ratio across the stencil.
pub fn d_mi_codebook_mc(cb: &Codebook, gamma: f64, h: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_gamma(gamma)?;
    if h.is_nan() || h <= 0.0 {
        return Err(LabError::Domain(format!("step must be positive, got {h}")));
    }
    let n = cb.n() as f64;
    mc_mean(samples, seed, |rng| {
        let (i, noise) = draw(cb, rng);
        let lr = LogRatio::new(cb, i, &noise);
        Ok(finite_difference(|g| Ok(lr.at(g)), gamma, h)? / n)
    })
}

/// Paired per-sample estimate of `dI/dγ − ½·mmse`, per dimension, using the
/// same codeword and noise draw for both terms.
pub fn immse_gap_mc(cb: &Codebook, gamma: f64, h: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_gamma(gamma)?;
    let n = cb.n() as f64;
    mc_mean(samples, seed, |rng| {
        let (i, noise) = draw(cb, rng);
        let lr = LogRatio::new(cb, i, &noise);
        let d = finite_difference(|g| Ok(lr.at(g)), gamma, h)?;
        let e = error_vector(cb, i, &noise, gamma)?;
        Ok((d - 0.5 * e.iter().map(|v| v * v).sum::<f64>()) / n)
    })
}
