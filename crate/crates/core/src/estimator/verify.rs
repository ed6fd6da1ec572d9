use serde::Serialize;

use super::codebook::Codebook;
use super::mc::{d_mi_codebook_mc, default_step, finite_difference, immse_gap_mc, mmse_codebook_mc};
use super::scalar::{mi_scalar_quadrature, mmse_scalar_quadrature, Constellation};
use crate::analytics::mmse_gaussian;
use crate::error::{ensure_positive, LabError, Result};

/// Input whose I-MMSE relation is checked.
#[derive(Debug, Clone, Copy)]
pub enum ImmseInput<'a> {
    /// Closed forms for a Gaussian input of the given power.
    Gaussian { power: f64 },
    /// Both sides by gated quadrature.
    Constellation { constellation: &'a Constellation, order: usize },
    /// Both sides by Monte Carlo, per dimension.
    Codebook { codebook: &'a Codebook, samples: usize, seed: u64 },
}

/// One grid point of an I-MMSE check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImmseRow {
    pub gamma: f64,
    /// Finite-difference `dI/dγ`.
    pub d_mi: f64,
    pub half_mmse: f64,
    pub abs_error: f64,
    /// Tolerance applied at this point (inflated by 3σ for Monte Carlo).
    pub tolerance: f64,
    /// Standard error of the paired difference, Monte Carlo only.
    pub std_error: Option<f64>,
    pub pass: bool,
}

fn gaussian_mi(power: f64, gamma: f64) -> Result<f64> {
    Ok(0.5 * (gamma * power).ln_1p())
}

/// Checks `dI/dγ = ½·mmse(γ)` on a strictly increasing grid. `h = None`
/// uses `1e-3·max(1, γ)` per point; every step must be at most a quarter of
/// the smallest grid spacing.
pub fn verify_immse(input: ImmseInput<'_>, grid: &[f64], h: Option<f64>, tol: f64) -> Result<Vec<ImmseRow>> {
    ensure_positive(tol, "tol")?;
    if grid.is_empty() {
        return Err(LabError::Domain("empty gamma grid".into()));
    }
    if grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(LabError::Domain("gamma grid must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Domain("gamma grid must be strictly increasing".into()));
    }
    let min_spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let step = |g: f64| h.unwrap_or_else(|| default_step(g));
    for &g in grid {
        let s = step(g);
        if s.is_nan() || s <= 0.0 || s > min_spacing / 4.0 {
            return Err(LabError::Domain(format!(
                "step {s} at gamma {g} exceeds a quarter of the grid spacing {min_spacing}"
            )));
        }
    }

    grid.iter()
        .enumerate()
        .map(|(k, &gamma)| {
            let h = step(gamma);
            let (d_mi, half_mmse, std_error) = match input {
                ImmseInput::Gaussian { power } => {
                    ensure_positive(power, "power")?;
                    let d = finite_difference(|g| gaussian_mi(power, g), gamma, h)?;
                    (d, 0.5 * mmse_gaussian(power, gamma), None)
                }
                ImmseInput::Constellation { constellation, order } => {
                    let d = finite_difference(|g| mi_scalar_quadrature(constellation, g, order), gamma, h)?;
                    (d, 0.5 * mmse_scalar_quadrature(constellation, gamma, order)?, None)
                }
                ImmseInput::Codebook { codebook, samples, seed } => {
                    // Distinct streams per grid point keep rows independent.
                    let point_seed = seed.wrapping_add(k as u64);
                    let d = d_mi_codebook_mc(codebook, gamma, h, samples, point_seed)?;
                    let m = mmse_codebook_mc(codebook, gamma, samples, point_seed)?;
                    let gap = immse_gap_mc(codebook, gamma, h, samples, point_seed)?;
                    (d.value, 0.5 * m.value, Some(gap.std_error))
                }
            };
            let abs_error = (d_mi - half_mmse).abs();
            let tolerance = tol + 3.0 * std_error.unwrap_or(0.0);
            Ok(ImmseRow {
                gamma,
                d_mi,
                half_mmse,
                abs_error,
                tolerance,
                std_error,
                pass: abs_error <= tolerance,
            })
        })
        .collect()
}
