use thiserror::Error;

/// Errors raised by the lab's numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity falls outside an admissible closed interval.
    #[error("{name} = {value} lies outside the admissible interval [{lo}, {hi}]")]
    Range { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    /// A matrix that must be positive definite is not (singular or indefinite).
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigensolver did not converge within {rotations} rotations")]
    NoConvergence { rotations: usize },

    /// A desk-scale resource cap was exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// A quadrature rule failed its convergence gate.
    #[error("quadrature of order {order} did not reach tolerance {tol:e} (discrepancy {discrepancy:e})")]
    Quadrature { order: usize, tol: f64, discrepancy: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonFinite(what))
    }
}

pub(crate) fn ensure_nonneg(value: f64, what: &'static str) -> Result<()> {
    if value.is_nan() {
        return Err(LabError::NonFinite(what));
    }
    if value < 0.0 {
        return Err(LabError::Domain(format!("{what} must be non-negative, got {value}")));
    }
    Ok(())
}

pub(crate) fn ensure_positive(value: f64, what: &'static str) -> Result<()> {
    ensure_finite(value, what)?;
    if value <= 0.0 {
        return Err(LabError::Domain(format!("{what} must be positive, got {value}")));
    }
    Ok(())
}
