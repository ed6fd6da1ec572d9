//! Corner points of multi-user rate regions: the two-user MAC with an
//! interfering transmitter, and the three-node cascade with proportional
//! path-loss decay. Rates are in nats.

use serde::Serialize;

use crate::analytics::GoodCodeProfile;
use crate::error::{ensure_nonneg, LabError, Result};

/// Two MAC users plus an interferer received with gain `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacInterferenceParams {
    pub snr1: f64,
    pub snr2: f64,
    pub snr_z: f64,
    pub a: f64,
}

impl MacInterferenceParams {
    pub fn new(snr1: f64, snr2: f64, snr_z: f64, a: f64) -> Result<Self> {
        for (v, name) in [(snr1, "snr1"), (snr2, "snr2"), (snr_z, "snr_z"), (a, "a")] {
            check_finite_nonneg(v, name)?;
        }
        Ok(Self { snr1, snr2, snr_z, a })
    }
}

/// Three transmitters in a line; `a2` scales transmitter 2 at receiver 1 and
/// `a3` scales transmitter 3 at receiver 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeParams {
    pub snr1: f64,
    pub snr2: f64,
    pub snr3: f64,
    pub a2: f64,
    pub a3: f64,
}

impl CascadeParams {
    pub fn new(snr1: f64, snr2: f64, snr3: f64, a2: f64, a3: f64) -> Result<Self> {
        for (v, name) in [(snr1, "snr1"), (snr2, "snr2"), (snr3, "snr3")] {
            check_finite_nonneg(v, name)?;
        }
        for (v, name) in [(a2, "a2"), (a3, "a3")] {
            check_weak_gain(v, name)?;
        }
        Ok(Self { snr1, snr2, snr3, a2, a3 })
    }

    /// Same per-hop decay `a` on both links.
    pub fn proportional(snr1: f64, snr2: f64, snr3: f64, a: f64) -> Result<Self> {
        Self::new(snr1, snr2, snr3, a, a)
    }

    /// The per-hop decay when both gains agree.
    pub fn decay(&self) -> Result<f64> {
        if self.a2 == self.a3 {
            Ok(self.a2)
        } else {
            Err(LabError::Domain(format!(
                "cascade boundary needs a single per-hop decay, got a2 = {} and a3 = {}",
                self.a2, self.a3
            )))
        }
    }
}

fn check_finite_nonneg(v: f64, name: &'static str) -> Result<()> {
    ensure_nonneg(v, name)?;
    if v.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonFinite(name))
    }
}

fn check_weak_gain(a: f64, name: &'static str) -> Result<()> {
    check_finite_nonneg(a, name)?;
    if a >= 1.0 {
        return Err(LabError::Range { name, value: a, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(LabError::Range { name: "beta", value: beta, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

fn half_ln1p(x: f64) -> f64 {
    0.5 * x.ln_1p()
}

/// `(R1, R2, Rz)` on the MAC-with-interference boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacRates {
    pub r1: f64,
    pub r2: f64,
    pub rz: f64,
}

/// `(R1, R2, R3)` on the cascade boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeRates {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

/// SNR `a·snr_z/(1 + snr1 + snr2)` from which any admissible interference
/// must have zero MMSE.
pub fn mac_mmse_threshold(p: &MacInterferenceParams) -> f64 {
    p.a * p.snr_z / (1.0 + p.snr1 + p.snr2)
}

/// Zero-MMSE-from-threshold profile of the interference, or `None` when the
/// threshold is zero (no interference).
pub fn mac_interference_profile(p: &MacInterferenceParams) -> Result<Option<GoodCodeProfile>> {
    let t = mac_mmse_threshold(p);
    if t == 0.0 {
        return Ok(None);
    }
    GoodCodeProfile::unit(t).map(Some)
}

/// `R1 = ½ln(1 + β·snr1)`, `R2 = ½ln(1 + ((1−β)snr1 + snr2)/(1 + β·snr1))`,
/// `Rz = ½ln(1 + a·snr_z/(1 + snr1 + snr2))`.
pub fn mac_weak_boundary(p: &MacInterferenceParams, beta: f64) -> Result<MacRates> {
    check_weak_gain(p.a, "a")?;
    check_beta(beta)?;
    Ok(MacRates {
        r1: half_ln1p(beta * p.snr1),
        r2: half_ln1p(((1.0 - beta) * p.snr1 + p.snr2) / (1.0 + beta * p.snr1)),
        rz: half_ln1p(mac_mmse_threshold(p)),
    })
}

/// Largest rate of the intermediate transmitter:
/// `min{½ln(1 + a2·snr2/(1 + snr1)), ½ln(1 + snr2/(1 + a3·snr3))}`.
pub fn intermediate_node_limit(p: &CascadeParams) -> f64 {
    half_ln1p(p.a2 * p.snr2 / (1.0 + p.snr1)).min(half_ln1p(p.snr2 / (1.0 + p.a3 * p.snr3)))
}

/// Boundary point of the proportional-decay cascade.
pub fn cascade_boundary(p: &CascadeParams, beta: f64) -> Result<CascadeRates> {
    let a = p.decay()?;
    check_beta(beta)?;
    let s2 = a * p.snr2;
    let s3 = a * a * p.snr3;
    Ok(CascadeRates {
        r1: half_ln1p(p.snr1),
        r2: half_ln1p(beta * s2 / (1.0 + p.snr1)),
        r3: half_ln1p(((1.0 - beta) * s2 + s3) / (1.0 + p.snr1 + beta * s2)),
    })
}

/// Sum-rate and individual upper bounds on `(R2, R3)` for the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeBounds {
    pub sum: f64,
    pub r2: f64,
    pub r3: f64,
}

pub fn cascade_sum_and_individual_bounds(p: &CascadeParams) -> Result<CascadeBounds> {
    let a = p.decay()?;
    let s2 = a * p.snr2;
    let s3 = a * a * p.snr3;
    let d = 1.0 + p.snr1;
    Ok(CascadeBounds { sum: half_ln1p((s2 + s3) / d), r2: half_ln1p(s2 / d), r3: half_ln1p(s3 / d) })
}
