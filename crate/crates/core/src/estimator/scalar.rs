use serde::Serialize;

use crate::error::{ensure_nonneg, LabError, Result};
use crate::quadrature::gated_expect_normal;

/// Finite scalar input distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    points: Vec<(f64, f64)>,
}

impl Constellation {
    pub const PROB_TOL: f64 = 1e-12;

    /// `points` are `(value, probability)` pairs.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::Domain("constellation has no points".into()));
        }
        if points.iter().any(|(v, p)| !v.is_finite() || !p.is_finite()) {
            return Err(LabError::NonFinite("constellation"));
        }
        if points.iter().any(|&(_, p)| p < 0.0) {
            return Err(LabError::Domain("constellation probabilities must be non-negative".into()));
        }
        let total: f64 = points.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > Self::PROB_TOL {
            return Err(LabError::Domain(format!("constellation probabilities sum to {total}, not 1")));
        }
        Ok(Self { points })
    }

    /// Equiprobable ±1.
    pub fn bpsk() -> Self {
        Self { points: vec![(-1.0, 0.5), (1.0, 0.5)] }
    }

    /// Equiprobable unit-power 4-PAM, `{±1, ±3}/√5`.
    pub fn pam4() -> Self {
        let c = 1.0 / 5.0_f64.sqrt();
        Self { points: vec![(-3.0 * c, 0.25), (-c, 0.25), (c, 0.25), (3.0 * c, 0.25)] }
    }

    /// A skewed three-point input with nonzero mean.
    pub fn asymmetric3() -> Self {
        Self { points: vec![(-1.2, 0.3), (0.4, 0.5), (1.6, 0.2)] }
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.points.iter().map(|&(v, p)| p * (v - mu) * (v - mu)).sum()
    }

    /// Entropy in nats; the saturation value of the mutual information for
    /// distinct points.
    pub fn entropy(&self) -> f64 {
        -self.points.iter().filter(|&&(_, p)| p > 0.0).map(|&(_, p)| p * p.ln()).sum::<f64>()
    }

    /// Posterior mean `E[X | Y = y]` with `Y = √γ·X + N`.
    pub fn posterior_mean(&self, y: f64, gamma: f64) -> f64 {
        let s = gamma.sqrt();
        let logs: Vec<f64> =
            self.points.iter().map(|&(v, p)| p.ln() + s * v * y - 0.5 * gamma * v * v).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (&(v, _), l) in self.points.iter().zip(&logs) {
            let w = (l - max).exp();
            num += w * v;
            den += w;
        }
        num / den
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    ensure_nonneg(gamma, "gamma")?;
    if gamma.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonFinite("gamma"))
    }
}

/// `E[(X − E[X|Y])²]` by gated Gauss–Hermite quadrature over the noise,
/// conditioning on each constellation point in turn.
pub fn mmse_scalar_quadrature(c: &Constellation, gamma: f64, order: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    let mut total = 0.0;
    for &(x, p) in c.points() {
        if p == 0.0 {
            continue;
        }
        let e = gated_expect_normal(order, |n| {
            let err = x - c.posterior_mean(s * x + n, gamma);
            err * err
        })?;
        total += p * e;
    }
    Ok(total.max(0.0))
}

/// `I(X; √γ·X + N)` in nats by gated Gauss–Hermite quadrature.
pub fn mi_scalar_quadrature(c: &Constellation, gamma: f64, order: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    let mut total = 0.0;
    for &(x, p) in c.points() {
        if p == 0.0 {
            continue;
        }
        // ln p(y|x)/p(y) = −ln Σⱼ pⱼ exp(−√γ(x − xⱼ)n − γ(x − xⱼ)²/2).
        let e = gated_expect_normal(order, |n| {
            let logs: Vec<f64> = c
                .points()
                .iter()
                .filter(|&&(_, pj)| pj > 0.0)
                .map(|&(xj, pj)| {
                    let d = x - xj;
                    pj.ln() - s * d * n - 0.5 * gamma * d * d
                })
                .collect();
            -log_sum_exp(&logs)
        })?;
        total += p * e;
    }
    Ok(total.max(0.0))
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}
