//! Gauss–Hermite quadrature for expectations over a standard normal variable.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{LabError, Result};

/// Default rule order for scalar estimators.
pub const DEFAULT_ORDER: usize = 61;
/// The gate compares a rule against one this many nodes larger.
pub const GATE_STEP: usize = 20;
/// Agreement required between the two rules, relative to `max(1, |value|)`.
pub const GATE_TOL: f64 = 1e-10;
pub const MIN_ORDER: usize = 20;
/// Largest order tried when the gate keeps failing.
pub const MAX_ORDER: usize = 2000;

const RESCALE: f64 = 1e150;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_STEPS: usize = 4;

/// Nodes and weights for `∫ e^{-t²} f(t) dt ≈ Σ wᵢ f(tᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the rule: eigenvalues of the Jacobi matrix seed the nodes, then
    /// Newton steps on the orthonormal Hermite recurrence polish them and
    /// supply the weights. The recurrence is rescaled as it runs so large
    /// orders do not overflow; far-tail weights underflow to zero.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(LabError::Domain("quadrature order must be positive".into()));
        }
        let n = order;
        let mut seeds = jacobi_matrix_eigenvalues(n)?;
        seeds.sort_by(|x, y| y.total_cmp(x));
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = if 2 * i + 1 == n { 0.0 } else { seeds[i] };
            let mut log_pp = hermite_eval(n, z).1;
            for _ in 0..NEWTON_STEPS {
                let (step, lp) = hermite_eval(n, z);
                log_pp = lp;
                z -= step;
                if step.abs() <= NEWTON_TOL * z.abs().max(1.0) {
                    break;
                }
            }
            if !z.is_finite() {
                return Err(LabError::Quadrature { order, tol: NEWTON_TOL, discrepancy: f64::NAN });
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = (std::f64::consts::LN_2 - 2.0 * log_pp).exp();
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    /// Shared, lazily built rule of the given order.
    pub fn cached(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&order) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(order)?);
        cache.lock().expect("quadrature cache poisoned").insert(order, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(N)]` for `N ~ N(0, 1)`.
    pub fn expect_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let s: f64 =
            self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(std::f64::consts::SQRT_2 * t)).sum();
        s / PI.sqrt()
    }
}

/// Newton step `p_n(z)/p_n'(z)` and `ln|p_n'(z)|` for the orthonormal Hermite
/// polynomial of degree n.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (PI.powf(-0.25), 0.0);
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    let pp = (2.0 * n as f64).sqrt() * p2;
    (p1 / pp, pp.abs().ln() + log_scale)
}

/// Eigenvalues of the symmetric tridiagonal Jacobi matrix of the Hermite
/// weight (zero diagonal, off-diagonal `√(k/2)`), by implicit QL.
fn jacobi_matrix_eigenvalues(n: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0_f64; n];
    let mut e: Vec<f64> = (1..=n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LabError::NoConvergence { rotations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Gated `E[f(N)]`: a rule of order `order` must agree with one of order
/// `order + GATE_STEP` to [`GATE_TOL`]. On disagreement the order doubles, up
/// to [`MAX_ORDER`]. Returns the larger rule's value.
pub fn gated_expect_normal(order: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut discrepancy = f64::NAN;
    if order >= MIN_ORDER {
        let mut k = order;
        while k <= MAX_ORDER {
            let lo = GaussHermite::cached(k)?.expect_normal(&f);
            let hi = GaussHermite::cached(k + GATE_STEP)?.expect_normal(&f);
            discrepancy = (hi - lo).abs();
            if discrepancy <= GATE_TOL * hi.abs().max(1.0) {
                return Ok(hi);
            }
            k *= 2;
        }
    }
    Err(LabError::Quadrature { order, tol: GATE_TOL, discrepancy })
}
