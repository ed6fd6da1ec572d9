//! Gaussian KL divergences between a joint law and the product of its
//! marginals, plus eigenvalue bounds for products of PSD matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::{self, psd_sqrt, spd_inverse, spd_inverse_sqrt, spd_log_det};
use crate::model::{cross_correlation_b, CovMatrix, IncrementalDecomposition};

pub use crate::linalg::sym_eigenvalues;

/// Eigenvalues this close to 1 make `ln(1 − λ)` meaningless.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// Zero-mean jointly Gaussian pair `(y₁, y₂)` with covariance
/// `[[A, Bᵀ], [B, C]]`.
#[derive(Debug, Clone)]
pub struct BlockGaussianPair {
    a: CovMatrix,
    b: DMatrix<f64>,
    c: CovMatrix,
}

impl BlockGaussianPair {
    /// `a` and `c` must be nonsingular; `b` is `E[y₂y₁ᵀ]`.
    pub fn new(a: CovMatrix, b: DMatrix<f64>, c: CovMatrix) -> Result<Self> {
        let n = a.dim();
        if c.dim() != n {
            return Err(LabError::Dimension { expected: n, got: c.dim() });
        }
        if b.nrows() != n || b.ncols() != n {
            return Err(LabError::Dimension {
                expected: n,
                got: if b.nrows() != n { b.nrows() } else { b.ncols() },
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("cross-covariance"));
        }
        for (m, name) in [(&a, "A"), (&c, "C")] {
            let min = m.eigenvalues()?.last().copied().unwrap_or(0.0);
            if min <= 0.0 {
                return Err(LabError::NotPositiveDefinite(format!(
                    "block {name} is singular (smallest eigenvalue {min:e})"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    /// Pair of incremental observations of a code with covariance `cov_x`:
    /// `A = αCov + (σ₁²+σ₂²)I`, `C = αCov + (σ₁²+(snr/δ)²σ₂²)I`,
    /// `B = α(Cov − I)`.
    pub fn incremental(cov_x: &CovMatrix, d: &IncrementalDecomposition) -> Result<Self> {
        let n = cov_x.dim();
        let eye = DMatrix::<f64>::identity(n, n);
        let scaled = cov_x.matrix() * d.alpha;
        let r = d.snr_over_delta();
        let a = CovMatrix::new(&scaled + &eye * (d.sigma1_sq + d.sigma2_sq))?;
        let c = CovMatrix::new(&scaled + &eye * (d.sigma1_sq + r * r * d.sigma2_sq))?;
        Self::new(a, cross_correlation_b(cov_x, d.alpha)?, c)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &CovMatrix {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &CovMatrix {
        &self.c
    }

    /// The joint covariance `[[A, Bᵀ], [B, C]]`.
    pub fn assembled(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(self.a.matrix());
        m.view_mut((0, n), (n, n)).copy_from(&self.b.transpose());
        m.view_mut((n, 0), (n, n)).copy_from(&self.b);
        m.view_mut((n, n), (n, n)).copy_from(self.c.matrix());
        m
    }

    /// The product-of-marginals covariance `diag(A, C)`.
    pub fn block_diagonal(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(self.a.matrix());
        m.view_mut((n, n), (n, n)).copy_from(self.c.matrix());
        m
    }

    /// Eigenvalues of `C⁻¹BA⁻¹Bᵀ` (descending), through the symmetric
    /// similarity `C^{-1/2}BA⁻¹BᵀC^{-1/2}`.
    pub fn coupling_eigenvalues(&self) -> Result<Vec<f64>> {
        let c_isqrt = spd_inverse_sqrt(self.c.matrix())?;
        let a_inv = spd_inverse(self.a.matrix())?;
        let inner = &c_isqrt * &self.b * a_inv * self.b.transpose() * &c_isqrt;
        sym_eigenvalues(&inner)
    }
}

/// `D(N(0, Σ₀) ‖ N(0, Σ₁)) = ½(tr(Σ₁⁻¹Σ₀) − d + ln|Σ₁| − ln|Σ₀|)`, computed
/// with Cholesky factorizations.
pub fn kl_gaussian_direct(sigma0: &DMatrix<f64>, sigma1: &DMatrix<f64>) -> Result<f64> {
    let d = sigma0.nrows();
    if sigma0.ncols() != d || sigma1.nrows() != d || sigma1.ncols() != d {
        return Err(LabError::Dimension { expected: d, got: sigma1.nrows() });
    }
    if sigma0.iter().chain(sigma1.iter()).any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("KL covariance"));
    }
    let chol = nalgebra::Cholesky::new(linalg::symmetrize(sigma1))
        .ok_or_else(|| LabError::NotPositiveDefinite("Σ₁ is singular".into()))?;
    let trace = chol.solve(sigma0).trace();
    let ld1 = spd_log_det(sigma1)?;
    let ld0 =
        spd_log_det(sigma0).map_err(|_| LabError::NotPositiveDefinite("|Σ₀| is not positive".into()))?;
    Ok((0.5 * (trace - d as f64 + ld1 - ld0)).max(0.0))
}

/// `−½ Σ ln(1 − λᵢ)` over the coupling eigenvalues of the pair: the KL from the
/// joint law to the product of marginals.
pub fn kl_block_independent(pair: &BlockGaussianPair) -> Result<f64> {
    let lambdas = pair.coupling_eigenvalues()?;
    let mut sum = 0.0;
    for l in lambdas {
        if l >= 1.0 - DEGENERATE_GAP {
            return Err(LabError::NotPositiveDefinite(format!(
                "assembled covariance not PD (coupling eigenvalue {l})"
            )));
        }
        // Round-off can push zero eigenvalues slightly negative.
        sum -= (-l.max(0.0)).ln_1p();
    }
    Ok(0.5 * sum)
}

/// Mutual information of the jointly Gaussian pair, in nats.
pub fn mi_gaussian_pair(pair: &BlockGaussianPair) -> Result<f64> {
    kl_block_independent(pair)
}

/// Majorization sandwich for `λ_t(M₁M₂)` (1-based `t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBounds {
    pub lower: f64,
    pub upper: f64,
}

fn check_pair(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<usize> {
    let n = m1.nrows();
    for m in [m1, m2] {
        if m.nrows() != n || m.ncols() != n {
            return Err(LabError::Dimension { expected: n, got: m.nrows().max(m.ncols()) });
        }
    }
    Ok(n)
}

/// `lower = max_{i+j=t+n} λᵢ(M₁)λⱼ(M₂)`, `upper = min_{i+j=t+1} λᵢ(M₁)λⱼ(M₂)`.
pub fn eigenvalue_product_bounds(m1: &DMatrix<f64>, m2: &DMatrix<f64>, t: usize) -> Result<ProductBounds> {
    let n = check_pair(m1, m2)?;
    if t == 0 || t > n {
        return Err(LabError::Range { name: "t", value: t as f64, lo: 1.0, hi: n as f64 });
    }
    let l1 = sym_eigenvalues(m1)?;
    let l2 = sym_eigenvalues(m2)?;
    Ok(product_bounds_from_spectra(&l1, &l2, t))
}

/// Same as [`eigenvalue_product_bounds`] for already sorted spectra.
pub fn product_bounds_from_spectra(l1: &[f64], l2: &[f64], t: usize) -> ProductBounds {
    let n = l1.len();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 1..=n {
        let j = t + n - i;
        if (1..=n).contains(&j) {
            lower = lower.max(l1[i - 1] * l2[j - 1]);
        }
        if t + 1 > i {
            let j = t + 1 - i;
            if j <= n {
                upper = upper.min(l1[i - 1] * l2[j - 1]);
            }
        }
    }
    ProductBounds { lower, upper }
}

/// Eigenvalues of `M₁M₂` (descending) via `M₂^{1/2}M₁M₂^{1/2}`.
pub fn product_eigenvalues(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_pair(m1, m2)?;
    let r = psd_sqrt(m2)?;
    sym_eigenvalues(&(&r * m1 * &r))
}

/// Outcome of comparing the MMSE matrix spectrum with the input covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenBoundCheck {
    pub holds: bool,
    /// `λ_max(Cov_x) − λ_max(E)`.
    pub margin: f64,
}

/// Checks `λ_max(E) ≤ λ_max(Cov_x) + tol`.
pub fn mmse_eigen_bound_check(e: &CovMatrix, cov_x: &CovMatrix, tol: f64) -> Result<EigenBoundCheck> {
    if e.dim() != cov_x.dim() {
        return Err(LabError::Dimension { expected: cov_x.dim(), got: e.dim() });
    }
    let margin = cov_x.eigenvalues()?[0] - e.eigenvalues()?[0];
    Ok(EigenBoundCheck { holds: margin >= -tol, margin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{incremental_decomposition, ChannelParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    fn cov(n: usize, v: &[f64]) -> CovMatrix {
        CovMatrix::new(m(n, v)).unwrap()
    }

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose() + DMatrix::identity(n, n) * 0.1
    }

    fn random_pair(n: usize, rng: &mut ChaCha8Rng) -> BlockGaussianPair {
        let s = random_pd(2 * n, rng);
        let a = CovMatrix::new(s.view((0, 0), (n, n)).into_owned()).unwrap();
        let c = CovMatrix::new(s.view((n, n), (n, n)).into_owned()).unwrap();
        BlockGaussianPair::new(a, s.view((n, 0), (n, n)).into_owned(), c).unwrap()
    }

    #[test]
    fn direct_examples() {
        let s = m(2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(kl_gaussian_direct(&s, &s).unwrap().abs() < 1e-15);
        let v = kl_gaussian_direct(&m(1, &[2.0]), &m(1, &[1.0])).unwrap();
        assert!((v - 0.5 * (1.0 + 0.5_f64.ln())).abs() < 1e-15);
        assert!((v - 0.153426).abs() < 1e-6);
        assert!(kl_gaussian_direct(&s, &m(2, &[1.0, 1.0, 1.0, 1.0])).is_err());
        assert!(kl_gaussian_direct(&m(2, &[1.0, 1.0, 1.0, 1.0]), &s).is_err());
    }

    #[test]
    fn block_examples() {
        let one = cov(1, &[1.0]);
        let zero = BlockGaussianPair::new(one.clone(), m(1, &[0.0]), one.clone()).unwrap();
        assert_eq!(kl_block_independent(&zero).unwrap(), 0.0);
        let half = BlockGaussianPair::new(one.clone(), m(1, &[0.5]), one.clone()).unwrap();
        let v = kl_block_independent(&half).unwrap();
        let direct = kl_gaussian_direct(&half.assembled(), &half.block_diagonal()).unwrap();
        assert!((v - direct).abs() < 1e-14);
        assert!((v + 0.5 * 0.75_f64.ln()).abs() < 1e-15);
        assert!((v - 0.143841).abs() < 1e-6);
        let full = BlockGaussianPair::new(one.clone(), m(1, &[1.0]), one).unwrap();
        assert!(matches!(kl_block_independent(&full), Err(LabError::NotPositiveDefinite(_))));
    }

    #[test]
    fn block_rejects_bad_shapes() {
        let one = cov(1, &[1.0]);
        let two = CovMatrix::identity(2);
        assert!(BlockGaussianPair::new(one.clone(), m(1, &[0.0]), two.clone()).is_err());
        assert!(BlockGaussianPair::new(two.clone(), m(1, &[0.0]), two.clone()).is_err());
        assert!(BlockGaussianPair::new(cov(1, &[0.0]), m(1, &[0.0]), one).is_err());
    }

    #[test]
    fn scalar_correlation_mi() {
        for rho in [0.0, 0.1, 0.5, -0.7, 0.95] {
            let one = cov(1, &[1.0]);
            let pair = BlockGaussianPair::new(one.clone(), m(1, &[rho]), one).unwrap();
            let mi = mi_gaussian_pair(&pair).unwrap();
            assert!((mi + 0.5 * (1.0 - rho * rho).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn block_matches_direct_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 10, 20] {
            let pair = random_pair(n, &mut rng);
            let block = kl_block_independent(&pair).unwrap();
            let direct = kl_gaussian_direct(&pair.assembled(), &pair.block_diagonal()).unwrap();
            assert!((block - direct).abs() <= 1e-8 * direct.abs(), "n={n}: {block} vs {direct}");
        }
    }

    #[test]
    fn block_trace_is_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 3, 8] {
            let pair = random_pair(n, &mut rng);
            let chol = nalgebra::Cholesky::new(pair.block_diagonal()).unwrap();
            let tr = chol.solve(&pair.assembled()).trace();
            assert!((tr - 2.0 * n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn incremental_pair_identity_cov() {
        let params = ChannelParams::new(1.0, 1.0, 0.5).unwrap();
        let d = incremental_decomposition(&params, 0.1, 0.05).unwrap();
        let pair = BlockGaussianPair::incremental(&CovMatrix::identity(3), &d).unwrap();
        assert!(pair.b().iter().all(|&v| v == 0.0));
        assert_eq!(mi_gaussian_pair(&pair).unwrap(), 0.0);
    }

    #[test]
    fn incremental_pair_decreases_with_deviation() {
        let params = ChannelParams::new(1.0, 1.0, 0.5).unwrap();
        let d = incremental_decomposition(&params, 0.1, 0.05).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.5, 0.2, 0.05, 0.01] {
            let c = cov(2, &[1.0 + eps, 0.0, 0.0, 1.0 - eps]);
            let pair = BlockGaussianPair::incremental(&c, &d).unwrap();
            let v = kl_block_independent(&pair).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn product_bounds_diagonal() {
        let m1 = m(2, &[2.0, 0.0, 0.0, 1.0]);
        let m2 = m(2, &[3.0, 0.0, 0.0, 1.0]);
        let b1 = eigenvalue_product_bounds(&m1, &m2, 1).unwrap();
        assert_eq!((b1.lower, b1.upper), (3.0, 6.0));
        let b2 = eigenvalue_product_bounds(&m1, &m2, 2).unwrap();
        assert_eq!((b2.lower, b2.upper), (1.0, 2.0));
        let prod = product_eigenvalues(&m1, &m2).unwrap();
        assert!((prod[0] - 6.0).abs() < 1e-12 && (prod[1] - 1.0).abs() < 1e-12);
        assert!(eigenvalue_product_bounds(&m1, &m2, 0).is_err());
        assert!(eigenvalue_product_bounds(&m1, &m2, 3).is_err());
        assert!(eigenvalue_product_bounds(&m1, &DMatrix::identity(3, 3), 1).is_err());
    }

    #[test]
    fn product_bounds_identity_factor() {
        let m2 = m(3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 0.7]);
        let l2 = sym_eigenvalues(&m2).unwrap();
        for t in 1..=3 {
            let b = eigenvalue_product_bounds(&DMatrix::identity(3, 3), &m2, t).unwrap();
            assert!((b.lower - l2[t - 1]).abs() < 1e-14 && (b.upper - l2[t - 1]).abs() < 1e-14);
        }
    }

    #[test]
    fn product_bounds_random_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m1 = random_pd(4, &mut rng);
            let m2 = random_pd(4, &mut rng);
            let prod = product_eigenvalues(&m1, &m2).unwrap();
            for t in 1..=4 {
                let b = eigenvalue_product_bounds(&m1, &m2, t).unwrap();
                assert!(b.lower <= prod[t - 1] + 1e-10 && prod[t - 1] <= b.upper + 1e-10);
            }
        }
    }

    #[test]
    fn eigen_bound_examples() {
        let c = cov(2, &[1.2, 0.3, 0.3, 0.8]);
        let same = mmse_eigen_bound_check(&c, &c, 0.0).unwrap();
        assert!(same.holds && same.margin == 0.0);
        let zero = mmse_eigen_bound_check(&cov(2, &[0.0; 4]), &c, 0.0).unwrap();
        assert!(zero.holds);
        assert!((zero.margin - c.eigenvalues().unwrap()[0]).abs() < 1e-15);
        let big = mmse_eigen_bound_check(&cov(2, &[2.0, 0.0, 0.0, 2.0]), &c, 1e-3).unwrap();
        assert!(!big.holds);
        assert!(mmse_eigen_bound_check(&CovMatrix::identity(3), &c, 0.0).is_err());
    }

    #[test]
    fn sym_eigenvalues_diag() {
        let v = sym_eigenvalues(&m(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(v, vec![3.0, 2.0, 1.0]);
    }

    proptest! {
        #[test]
        fn kl_nonneg_and_matches(seed in 0u64..10_000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = random_pair(n, &mut rng);
            let v = kl_block_independent(&pair).unwrap();
            let direct = kl_gaussian_direct(&pair.assembled(), &pair.block_diagonal()).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!((v - direct).abs() <= 1e-8 * direct.max(1e-6));
        }
    }
}
