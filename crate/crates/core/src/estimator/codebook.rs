use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_nonneg, LabError, Result};
use crate::model::CovMatrix;

/// Desk-scale cap on the number of codewords.
pub const MAX_CODEWORDS: usize = 1 << 20;

/// Per-codeword power slack: `(1/n)‖x‖² ≤ 1 + POWER_SLACK`.
pub const POWER_SLACK: f64 = 1e-12;

/// Finite codebook with a uniform prior. Codewords are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    words: Vec<f64>,
}

impl Codebook {
    /// Builds a codebook from rows of `words` (M×n).
    pub fn new(words: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = words.shape();
        let flat: Vec<f64> = (0..m).flat_map(|i| words.row(i).iter().copied().collect::<Vec<_>>()).collect();
        Self::from_flat(n, flat)
    }

    /// `flat` holds M codewords of length `n` back to back.
    pub fn from_flat(n: usize, flat: Vec<f64>) -> Result<Self> {
        if n == 0 || flat.is_empty() || !flat.len().is_multiple_of(n) {
            return Err(LabError::Domain(format!(
                "codebook needs n >= 1 and M >= 1 whole codewords (n = {n}, {} entries)",
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("codebook"));
        }
        let cb = Self { n, words: flat };
        for i in 0..cb.size() {
            let p = cb.codeword(i).iter().map(|v| v * v).sum::<f64>() / n as f64;
            if p > 1.0 + POWER_SLACK {
                return Err(LabError::Domain(format!(
                    "codeword {i} has power {p} above the unit constraint"
                )));
            }
        }
        Ok(cb)
    }

    /// Two antipodal codewords `±(1, …, 1)`.
    pub fn antipodal_ones(n: usize) -> Result<Self> {
        let mut flat = vec![1.0; n];
        flat.extend(std::iter::repeat_n(-1.0, n));
        Self::from_flat(n, flat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of codewords M.
    pub fn size(&self) -> usize {
        self.words.len() / self.n
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.words[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size(), self.n, &self.words)
    }

    pub fn mean(&self) -> DVector<f64> {
        let m = self.size() as f64;
        let mut mu = DVector::zeros(self.n);
        for i in 0..self.size() {
            for (k, v) in self.codeword(i).iter().enumerate() {
                mu[k] += v;
            }
        }
        mu / m
    }

    /// Centered covariance `(1/M) Σ (xᵢ − μ)(xᵢ − μ)ᵀ` under the uniform prior.
    pub fn covariance(&self) -> Result<CovMatrix> {
        let mu = self.mean();
        let mut c = DMatrix::zeros(self.n, self.n);
        for i in 0..self.size() {
            let d = DVector::from_column_slice(self.codeword(i)) - &mu;
            c.ger(1.0, &d, &d, 1.0);
        }
        CovMatrix::new(c / self.size() as f64)
    }
}

/// `round(exp(n·rate))`, rejected above [`MAX_CODEWORDS`].
pub fn codebook_size(n: usize, rate_nats: f64) -> Result<usize> {
    ensure_nonneg(rate_nats, "rate")?;
    if n == 0 {
        return Err(LabError::Domain("blocklength must be at least 1".into()));
    }
    let m = (n as f64 * rate_nats).exp().round();
    if m.is_nan() || m > MAX_CODEWORDS as f64 {
        return Err(LabError::Resource(format!(
            "codebook of M = {m} codewords exceeds the cap of {MAX_CODEWORDS}"
        )));
    }
    Ok((m as usize).max(1))
}

/// Random codebook at `rate_nats`: i.i.d. standard normal entries, each
/// codeword projected onto the sphere of radius √n.
pub fn generate_codebook(n: usize, rate_nats: f64, seed: u64) -> Result<Codebook> {
    let m = codebook_size(n, rate_nats)?;
    generate_codebook_of_size(n, m, seed)
}

/// Same construction with the codeword count given directly.
pub fn generate_codebook_of_size(n: usize, m: usize, seed: u64) -> Result<Codebook> {
    if n == 0 || m == 0 {
        return Err(LabError::Domain("codebook needs n >= 1 and M >= 1".into()));
    }
    if m > MAX_CODEWORDS {
        return Err(LabError::Resource(format!(
            "codebook of M = {m} codewords exceeds the cap of {MAX_CODEWORDS}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = (n as f64).sqrt();
    let mut flat = Vec::with_capacity(m * n);
    for _ in 0..m {
        let word = loop {
            let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break w.into_iter().map(|v| v * radius / norm).collect::<Vec<_>>();
            }
        };
        flat.extend(word);
    }
    Codebook::from_flat(n, flat)
}

/// Posterior probabilities of each codeword given `y = √γ·x + noise`,
/// normalized after subtracting the largest log-weight.
pub fn posterior_weights(cb: &Codebook, y: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_observation(cb, y, gamma)?;
    let s = gamma.sqrt();
    let logs: Vec<f64> = (0..cb.size())
        .map(|i| {
            let x = cb.codeword(i);
            let (dot, sq) = x.iter().zip(y).fold((0.0, 0.0), |(d, q), (a, b)| (d + a * b, q + a * a));
            s * dot - 0.5 * gamma * sq
        })
        .collect();
    Ok(normalize_log_weights(&logs))
}

pub(crate) fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

fn check_observation(cb: &Codebook, y: &[f64], gamma: f64) -> Result<()> {
    ensure_nonneg(gamma, "gamma")?;
    if !gamma.is_finite() {
        return Err(LabError::NonFinite("gamma"));
    }
    if y.len() != cb.n() {
        return Err(LabError::Dimension { expected: cb.n(), got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("observation"));
    }
    Ok(())
}

/// Conditional-mean estimate `E[x | y]` for the uniform prior over `cb`.
pub fn conditional_mean(cb: &Codebook, y: &[f64], gamma: f64) -> Result<DVector<f64>> {
    let w = posterior_weights(cb, y, gamma)?;
    let mut est = DVector::zeros(cb.n());
    for (i, wi) in w.iter().enumerate() {
        for (k, v) in cb.codeword(i).iter().enumerate() {
            est[k] += wi * v;
        }
    }
    Ok(est)
}
