//! Dense symmetric linear algebra shared by the analytic and estimation modules.
//!
//! Eigen decompositions use the cyclic Jacobi rotation method. Matrix functions
//! (inverse, square root, inverse square root) of symmetric positive definite
//! matrices are built from that decomposition so every eigenvalue the lab reports
//! comes from one solver.

use nalgebra::DMatrix;

use crate::error::{LabError, Result};

/// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Eigen decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors stored as columns, paired with `values`.
    pub vectors: DMatrix<f64>,
    /// Rotations applied before convergence.
    pub rotations: usize,
}

impl SymEigen {
    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// Rebuilds `V f(Λ) Vᵀ`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        let mut out = &scaled * self.vectors.transpose();
        symmetrize_in_place(&mut out);
        out
    }
}

/// Returns `(S + Sᵀ)/2`.
pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = s.clone();
    symmetrize_in_place(&mut out);
    out
}

fn symmetrize_in_place(s: &mut DMatrix<f64>) {
    let n = s.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
}

/// Largest absolute asymmetry `max |S_ij - S_ji|`.
pub fn asymmetry(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst
}

fn check_square(s: &DMatrix<f64>) -> Result<usize> {
    if s.nrows() != s.ncols() {
        return Err(LabError::Dimension { expected: s.nrows(), got: s.ncols() });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite("symmetric eigensolver input"));
    }
    Ok(s.nrows())
}

/// Eigen decomposition of the symmetric part of `s` by cyclic Jacobi rotations.
///
/// Fails with [`LabError::NoConvergence`] once more than `100·n²` rotations
/// have been applied without the off-diagonal mass dropping below
/// [`JACOBI_TOLERANCE`] relative to the Frobenius norm.
pub fn sym_eigen(s: &DMatrix<f64>) -> Result<SymEigen> {
    let n = check_square(s)?;
    let mut a = symmetrize(s);
    let mut v = DMatrix::<f64>::identity(n, n);
    let cap = 100 * n * n;
    let norm = a.norm();
    let mut rotations = 0usize;

    if n > 1 && norm > 0.0 {
        loop {
            let off = off_diagonal_norm(&a);
            if off <= JACOBI_TOLERANCE * norm {
                break;
            }
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 || apq.abs() <= f64::EPSILON * 1e-3 * norm {
                        continue;
                    }
                    if rotations >= cap {
                        return Err(LabError::NoConvergence { rotations });
                    }
                    rotate(&mut a, &mut v, p, q);
                    rotations += 1;
                    rotated = true;
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors, rotations })
}

/// Eigenvalues of the symmetric part of `s`, descending.
pub fn sym_eigenvalues(s: &DMatrix<f64>) -> Result<Vec<f64>> {
    sym_eigen(s).map(|e| e.values)
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let g = a[(r, p)];
        let h = a[(r, q)];
        let rp = g - s * (h + g * tau);
        let rq = h + s * (g - h * tau);
        a[(r, p)] = rp;
        a[(p, r)] = rp;
        a[(r, q)] = rq;
        a[(q, r)] = rq;
    }
    for r in 0..n {
        let g = v[(r, p)];
        let h = v[(r, q)];
        v[(r, p)] = g - s * (h + g * tau);
        v[(r, q)] = h + s * (g - h * tau);
    }
}

fn spd_eigen(s: &DMatrix<f64>, what: &str) -> Result<SymEigen> {
    let eig = sym_eigen(s)?;
    let max = eig.max_value().abs().max(f64::MIN_POSITIVE);
    if eig.min_value() <= max * 1e-14 {
        return Err(LabError::NotPositiveDefinite(format!(
            "{what}: smallest eigenvalue {:e}",
            eig.min_value()
        )));
    }
    Ok(eig)
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(s, "inverse")?.map_values(|l| 1.0 / l))
}

/// Symmetric inverse square root `S^{-1/2}`.
pub fn spd_inverse_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(s, "inverse square root")?.map_values(|l| 1.0 / l.sqrt()))
}

/// Symmetric square root of a positive semi-definite matrix; tiny negative
/// eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(sym_eigen(s)?.map_values(|l| l.max(0.0).sqrt()))
}

/// `ln det S` for symmetric positive definite `S`, via Cholesky.
pub fn spd_log_det(s: &DMatrix<f64>) -> Result<f64> {
    check_square(s)?;
    let chol = nalgebra::Cholesky::new(symmetrize(s))
        .ok_or_else(|| LabError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l();
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}
