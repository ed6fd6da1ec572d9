//! Closed-form mutual information, MMSE and Fisher information for Gaussian
//! inputs and for the idealized capacity-achieving ("good") code profile.
//!
//! All information quantities are in nats, per channel use.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{ensure_nonneg, ensure_positive, LabError, Result};
use crate::linalg::spd_log_det;
use crate::model::{d_gamma_prime, gamma_prime, ChannelParams, CovMatrix, IncrementalDecomposition};

/// Regime of the interfered-with output's mutual information curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `γ ∈ [0, 1)`: the good code acts as Gaussian noise.
    R1,
    /// `γ ∈ [1, 1/(1 − a·snr2))`: joint decoding region.
    R2,
    /// `γ ≥ 1/(1 − a·snr2)`: the code is decoded and removed.
    R3,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::R1 => "R1",
            Regime::R2 => "R2",
            Regime::R3 => "R3",
        }
    }
}

/// Start of the third regime, `1/(1 − a·snr2)`, or `None` when `a·snr2 ≥ 1`
/// and the second regime extends to infinity.
pub fn third_regime_start(params: &ChannelParams) -> Option<f64> {
    let g = params.interference_snr();
    (g < 1.0).then(|| 1.0 / (1.0 - g))
}

/// Regime containing γ; boundaries belong to the right-hand regime.
pub fn regime(params: &ChannelParams, gamma: f64) -> Regime {
    if gamma < 1.0 {
        Regime::R1
    } else {
        match third_regime_start(params) {
            Some(t) if gamma >= t => Regime::R3,
            _ => Regime::R2,
        }
    }
}

/// `I(z; y(γ))` per channel use for i.i.d. Gaussian z and a good code x
/// designed for `snr1`.
pub fn mi_gaussian_interference(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    let g = params.interference_snr();
    let s1 = params.snr1();
    Ok(match regime(params, gamma) {
        Regime::R1 => 0.5 * (gamma * g / (1.0 + gamma * s1)).ln_1p(),
        Regime::R2 => 0.5 * (((gamma - 1.0) * s1 + gamma * g) / (1.0 + s1)).ln_1p(),
        Regime::R3 => 0.5 * (gamma * g).ln_1p(),
    })
}

/// Derivative of [`mi_gaussian_interference`] with respect to γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiSlope {
    /// Right derivative (the derivative itself away from boundaries).
    pub value: f64,
    pub regime: Regime,
    /// Left derivative when γ sits exactly on a regime boundary.
    pub left_limit: Option<f64>,
}

fn slope_in(params: &ChannelParams, gamma: f64, regime: Regime) -> f64 {
    let g = params.interference_snr();
    let s1 = params.snr1();
    match regime {
        Regime::R1 => {
            let gp = gamma * g / (1.0 + gamma * s1);
            let denom = 1.0 + gamma * s1;
            0.5 / (1.0 + gp) * g / (denom * denom)
        }
        Regime::R2 => 0.5 * (g + s1) / (1.0 + gamma * (g + s1)),
        Regime::R3 => 0.5 * g / (1.0 + gamma * g),
    }
}

/// `dI(z; y(γ))/dγ`, half of the three-branch expression for `2·dI/dγ`.
pub fn d_mi_gaussian_interference(params: &ChannelParams, gamma: f64) -> Result<MiSlope> {
    ensure_nonneg(gamma, "gamma")?;
    let r = regime(params, gamma);
    let left = match r {
        Regime::R2 if gamma == 1.0 => Some(Regime::R1),
        Regime::R3 if Some(gamma) == third_regime_start(params) => {
            Some(if gamma == 1.0 { Regime::R1 } else { Regime::R2 })
        }
        _ => None,
    };
    Ok(MiSlope {
        value: slope_in(params, gamma, r),
        regime: r,
        left_limit: left.map(|l| slope_in(params, gamma, l)),
    })
}

/// MMSE of a Gaussian input of variance `power` observed at SNR γ.
pub fn mmse_gaussian(power: f64, gamma: f64) -> f64 {
    power / (1.0 + gamma * power)
}

/// Right-hand side of the I-MMSE-like relationship on `γ ∈ [0, 1)`, halved so
/// that it equals `dI/dγ`: `½·mmse_z(γ′)·a·snr2/(1 + γ·snr1)²`.
pub fn weak_branch_rhs(params: &ChannelParams, gamma: f64, mmse_z: impl Fn(f64) -> f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    if gamma >= 1.0 {
        return Err(LabError::Domain(format!("the weak branch holds on [0, 1); got gamma = {gamma}")));
    }
    let gp = gamma_prime(params, gamma)?;
    Ok(0.5 * mmse_z(gp) * d_gamma_prime(params, gamma)?)
}

/// `I(z; y(γ) | x) = ½ ln(1 + γ·a·snr2)` for unit-power Gaussian z.
pub fn conditional_mi_given_x(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    Ok(0.5 * (gamma * params.interference_snr()).ln_1p())
}

/// Idealized capacity-achieving code: mutual information follows the Gaussian
/// curve up to the design SNR and saturates there; the MMSE drops to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodCodeProfile {
    snr_design: f64,
    power: f64,
}

impl GoodCodeProfile {
    pub fn new(snr_design: f64, power: f64) -> Result<Self> {
        ensure_positive(snr_design, "snr_design")?;
        ensure_positive(power, "power")?;
        Ok(Self { snr_design, power })
    }

    /// Unit-power code designed for `snr_design`.
    pub fn unit(snr_design: f64) -> Result<Self> {
        Self::new(snr_design, 1.0)
    }

    /// Combined MAC codeword `√snr1·x₁ + √snr2·x₂` of power `snr1 + snr2`,
    /// decodable from γ = 1 on.
    pub fn mac_combined(snr1: f64, snr2: f64) -> Result<Self> {
        Self::new(1.0, snr1 + snr2)
    }

    pub fn snr_design(&self) -> f64 {
        self.snr_design
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// `½ ln(1 + min(γ, snr_design)·P)`.
pub fn mi_good_code(profile: &GoodCodeProfile, gamma: f64) -> f64 {
    0.5 * (gamma.min(profile.snr_design) * profile.power).ln_1p()
}

/// `P/(1 + γP)` below the design SNR, zero from the design SNR on.
pub fn mmse_good_code(profile: &GoodCodeProfile, gamma: f64) -> f64 {
    if gamma < profile.snr_design {
        mmse_gaussian(profile.power, gamma)
    } else {
        0.0
    }
}

/// `I(x; y(γ))` for the good code x (designed for `snr1`) with Gaussian z
/// treated as noise: effective SNR `γ·snr1/(1 + γ·a·snr2)`.
pub fn mi_x_branch(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    if params.snr1() == 0.0 {
        return Ok(0.0);
    }
    let profile = GoodCodeProfile::unit(params.snr1())?;
    let eff = gamma * params.snr1() / (1.0 + gamma * params.interference_snr());
    Ok(mi_good_code(&profile, eff))
}

/// `I(x; y(γ) | z)`: the good code observed at SNR `γ·snr1`.
pub fn mi_x_given_z(params: &ChannelParams, gamma: f64) -> Result<f64> {
    ensure_nonneg(gamma, "gamma")?;
    if params.snr1() == 0.0 {
        return Ok(0.0);
    }
    let profile = GoodCodeProfile::unit(params.snr1())?;
    Ok(mi_good_code(&profile, gamma * params.snr1()))
}

/// δ′ and δ̂ of the weak-SNR expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakSnrParams {
    pub delta: f64,
    pub alpha: f64,
    /// `δα/(1 + δα)`.
    pub delta_prime: f64,
    /// `δ/(1 + αδ)`.
    pub delta_hat: f64,
}

impl WeakSnrParams {
    pub fn new(delta: f64, alpha: f64) -> Result<Self> {
        ensure_positive(delta, "delta")?;
        ensure_positive(alpha, "alpha")?;
        let da = delta * alpha;
        Ok(Self { delta, alpha, delta_prime: da / (1.0 + da), delta_hat: delta / (1.0 + da) })
    }
}

/// Fisher information of the composite noise `√(δα)·x + n̂`, `Var(n̂) = 1 − δα`,
/// per component:
/// `J = (1 − g·mmse_x(g)) / (1 − δα)` with `g = δα/(1 − δα)`.
///
/// The literature form carries a `(1 + δα)` prefactor in one step; the
/// `(1 − δα)` form used here is the one that reproduces `1/(δαP + 1 − δα)`
/// for Gaussian x of power P.
pub fn fisher_composite_noise(mmse_x: impl Fn(f64) -> f64, delta: f64, alpha: f64) -> Result<f64> {
    ensure_positive(delta, "delta")?;
    ensure_nonneg(alpha, "alpha")?;
    let da = delta * alpha;
    if da >= 1.0 {
        return Err(LabError::Domain(format!("composite noise needs delta*alpha < 1, got {da}")));
    }
    let g = da / (1.0 - da);
    Ok((1.0 - g * mmse_x(g)) / (1.0 - da))
}

/// [`fisher_composite_noise`] for a Gaussian code of power P.
pub fn fisher_composite_noise_gaussian(power: f64, delta: f64, alpha: f64) -> Result<f64> {
    ensure_positive(power, "power")?;
    fisher_composite_noise(|g| mmse_gaussian(power, g), delta, alpha)
}

/// Weak-SNR lower bound
/// `(δ′/(2α))·tr(Cov_z) − (δ′²/2)·λ_max(Cov_x)·tr(Cov_z)`.
pub fn weak_snr_lower_bound(tr_cov: f64, lambda_max: f64, w: &WeakSnrParams) -> Result<f64> {
    ensure_nonneg(tr_cov, "tr_cov")?;
    ensure_nonneg(lambda_max, "lambda_max")?;
    let dp = w.delta_prime;
    Ok(dp / (2.0 * w.alpha) * tr_cov - 0.5 * dp * dp * lambda_max * tr_cov)
}

/// `γ ↦ c·mmse(c·γ)`: the MMSE function of the `√c`-scaled signal.
pub fn mmse_scaling_identity<F>(c: f64, mmse_fn: F) -> Result<impl Fn(f64) -> f64>
where
    F: Fn(f64) -> f64,
{
    ensure_positive(c, "c")?;
    Ok(move |gamma: f64| c * mmse_fn(c * gamma))
}

/// Start of the zero set after scaling by c: `γ* ↦ γ*/c`.
pub fn scaled_zero_threshold(c: f64, threshold: f64) -> Result<f64> {
    ensure_positive(c, "c")?;
    Ok(threshold / c)
}

/// Mutual information `I(z; √δ·z + √(δα)·x + n̂)` per dimension for jointly
/// Gaussian z (covariance `cov_z`) and x (covariance `cov_x`), with
/// `Var(n̂) = 1 − δα`.
pub fn weak_snr_mi_gaussian(cov_z: &CovMatrix, cov_x: &CovMatrix, delta: f64, alpha: f64) -> Result<f64> {
    ensure_positive(delta, "delta")?;
    ensure_nonneg(alpha, "alpha")?;
    let n = cov_z.dim();
    if cov_x.dim() != n {
        return Err(LabError::Dimension { expected: n, got: cov_x.dim() });
    }
    let da = delta * alpha;
    if da >= 1.0 {
        return Err(LabError::Domain(format!("composite noise needs delta*alpha < 1, got {da}")));
    }
    let noise = cov_x.matrix() * da + DMatrix::<f64>::identity(n, n) * (1.0 - da);
    let output = &noise + cov_z.matrix() * delta;
    Ok(0.5 * (spd_log_det(&output)? - spd_log_det(&noise)?) / n as f64)
}

/// Both sides of the incremental identity
/// `I(z; y_{snr+δ}) − I(z; y_snr) = I(z; y_{snr+δ} | y_snr)` for scalar
/// Gaussian z and x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementalIdentity {
    /// Difference of the two unconditional mutual informations.
    pub mi_difference: f64,
    /// Conditional mutual information from the joint covariance of
    /// `(z, y_{snr+δ}, y_snr)`.
    pub conditional_mi: f64,
}

impl IncrementalIdentity {
    pub fn abs_error(&self) -> f64 {
        (self.mi_difference - self.conditional_mi).abs()
    }
}

/// Evaluates both sides of the incremental identity for Gaussian z of
/// variance `var_z` and Gaussian x of variance `var_x`.
pub fn incremental_identity_gaussian(
    d: &IncrementalDecomposition,
    var_z: f64,
    var_x: f64,
) -> Result<IncrementalIdentity> {
    ensure_positive(var_z, "var_z")?;
    ensure_nonneg(var_x, "var_x")?;
    let alpha = d.alpha;
    // Noise (x plus Gaussian) variance in y_{snr+δ} and in y_snr.
    let noise_fine = alpha * var_x + d.sigma1_sq;
    let noise_coarse = noise_fine + d.sigma2_sq;
    let mi_difference = 0.5 * (var_z / noise_fine).ln_1p() - 0.5 * (var_z / noise_coarse).ln_1p();

    // Joint covariance of (z, y1, y2) with y1 = y_{snr+δ}, y2 = y_snr.
    let v1 = var_z + noise_fine;
    let v2 = v1 + d.sigma2_sq;
    let joint = DMatrix::from_row_slice(3, 3, &[var_z, var_z, var_z, var_z, v1, v1, var_z, v1, v2]);
    let sub = |idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |r, c| joint[(idx[r], idx[c])]);
    // I(z; y1 | y2) = ½ ln(|Σ_{z,y2}|·|Σ_{y1,y2}| / (|Σ_{y2}|·|Σ_{z,y1,y2}|)).
    let conditional_mi = 0.5
        * (spd_log_det(&sub(&[0, 2]))? + spd_log_det(&sub(&[1, 2]))?
            - spd_log_det(&sub(&[2]))?
            - spd_log_det(&joint)?);
    Ok(IncrementalIdentity { mi_difference, conditional_mi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::incremental_decomposition;
    use proptest::prelude::*;

    fn p(snr1: f64, snr2: f64, a: f64) -> ChannelParams {
        ChannelParams::new(snr1, snr2, a).unwrap()
    }

    /// Oracle: MI of z and y = sqrt(g)·z + w, Gaussian unit-power z and
    /// Gaussian w of variance `noise`, from the 2×2 covariance determinants.
    fn joint_gaussian_mi(g: f64, noise: f64) -> f64 {
        let vy = g + noise;
        let cov_zy = g.sqrt();
        let det = vy - cov_zy * cov_zy;
        0.5 * (vy / det).ln()
    }

    #[test]
    fn mi_examples() {
        let params = p(1.0, 1.0, 0.5);
        assert_eq!(mi_gaussian_interference(&params, 0.0).unwrap(), 0.0);
        let i1 = mi_gaussian_interference(&params, 1.0).unwrap();
        assert!((i1 - 0.5 * 1.25_f64.ln()).abs() < 1e-15);
        assert!((i1 - 0.111572).abs() < 1e-6);
        // At γ = 1 the code is still noise from z's viewpoint: noise 1 + γ·snr1.
        assert!((i1 - joint_gaussian_mi(0.5, 2.0)).abs() < 1e-14);
        let i3 = mi_gaussian_interference(&params, 3.0).unwrap();
        assert!((i3 - 0.5 * 2.5_f64.ln()).abs() < 1e-15);
        assert!((i3 - 0.458145).abs() < 1e-6);
        // γ = 3 is past the decoding threshold 2: unit noise.
        assert!((i3 - joint_gaussian_mi(1.5, 1.0)).abs() < 1e-14);
        // Inside R1 the oracle with noise 1 + γ·snr1 applies.
        let i = mi_gaussian_interference(&params, 0.6).unwrap();
        assert!((i - joint_gaussian_mi(0.3, 1.6)).abs() < 1e-14);
        assert!(mi_gaussian_interference(&params, -0.5).is_err());
    }

    #[test]
    fn regimes_and_collapse() {
        let params = p(1.0, 1.0, 0.5);
        assert_eq!(regime(&params, 0.99), Regime::R1);
        assert_eq!(regime(&params, 1.0), Regime::R2);
        assert_eq!(regime(&params, 1.99), Regime::R2);
        assert_eq!(regime(&params, 2.0), Regime::R3);
        let strong = p(1.0, 2.0, 0.5);
        assert_eq!(third_regime_start(&strong), None);
        assert_eq!(regime(&strong, 1e9), Regime::R2);
    }

    #[test]
    fn slope_examples() {
        let params = p(1.0, 1.0, 0.5);
        assert!((d_mi_gaussian_interference(&params, 0.0).unwrap().value - 0.25).abs() < 1e-15);
        let s = d_mi_gaussian_interference(&params, 4.0).unwrap();
        assert_eq!(s.regime, Regime::R3);
        assert!((s.value - 0.5 * 0.5 / 3.0).abs() < 1e-15);
        let awgn = p(0.0, 1.0, 0.5);
        for g in [0.0, 0.5, 1.0, 3.0, 10.0] {
            let v = d_mi_gaussian_interference(&awgn, g).unwrap().value;
            assert!((v - 0.25 / (1.0 + 0.5 * g)).abs() < 1e-15, "γ={g}");
        }
    }

    #[test]
    fn slope_boundary_flags() {
        let params = p(1.0, 1.0, 0.5);
        let at1 = d_mi_gaussian_interference(&params, 1.0).unwrap();
        assert_eq!(at1.regime, Regime::R2);
        let left = at1.left_limit.expect("boundary");
        assert!((left - slope_in(&params, 1.0, Regime::R1)).abs() < 1e-15);
        let at2 = d_mi_gaussian_interference(&params, 2.0).unwrap();
        assert_eq!(at2.regime, Regime::R3);
        assert!(at2.left_limit.is_some());
        assert!(d_mi_gaussian_interference(&params, 1.5).unwrap().left_limit.is_none());
    }

    #[test]
    fn slope_matches_central_difference() {
        let params = p(1.2, 0.9, 0.6);
        let h = 1e-5;
        for g in [0.0005, 0.3, 0.8, 1.2, 1.6, 2.5, 7.0] {
            let fd = (mi_gaussian_interference(&params, g + h).unwrap()
                - mi_gaussian_interference(&params, g - h).unwrap())
                / (2.0 * h);
            let v = d_mi_gaussian_interference(&params, g).unwrap().value;
            assert!((fd - v).abs() < 1e-8, "γ={g}: {fd} vs {v}");
        }
    }

    #[test]
    fn continuity_at_boundaries() {
        let params = p(1.0, 1.0, 0.5);
        let left = slope_free_left(&params, 1.0, Regime::R1);
        assert!((left - mi_gaussian_interference(&params, 1.0).unwrap()).abs() < 1e-15);
        let t = third_regime_start(&params).unwrap();
        let left = slope_free_left(&params, t, Regime::R2);
        assert!((left - mi_gaussian_interference(&params, t).unwrap()).abs() < 1e-15);
    }

    /// MI formula of a given regime evaluated off its own interval.
    fn slope_free_left(params: &ChannelParams, gamma: f64, r: Regime) -> f64 {
        let g = params.interference_snr();
        let s1 = params.snr1();
        match r {
            Regime::R1 => 0.5 * (gamma * g / (1.0 + gamma * s1)).ln_1p(),
            Regime::R2 => 0.5 * ((1.0 + gamma * (g + s1)) / (1.0 + s1)).ln(),
            Regime::R3 => 0.5 * (gamma * g).ln_1p(),
        }
    }

    #[test]
    fn weak_branch_rhs_matches_slope() {
        let params = p(1.0, 1.0, 0.5);
        assert!(weak_branch_rhs(&params, 1.0, |g| mmse_gaussian(1.0, g)).is_err());
        assert_eq!(weak_branch_rhs(&params, 0.4, |_| 0.0).unwrap(), 0.0);
        let at0 = weak_branch_rhs(&params, 0.0, |g| mmse_gaussian(1.0, g)).unwrap();
        assert!((at0 - 0.5 * 0.5).abs() < 1e-15);
        for k in 0..100 {
            let g = k as f64 / 100.0;
            let rhs = weak_branch_rhs(&params, g, |x| mmse_gaussian(1.0, x)).unwrap();
            let lhs = d_mi_gaussian_interference(&params, g).unwrap().value;
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn mmse_gaussian_examples() {
        assert_eq!(mmse_gaussian(1.0, 0.0), 1.0);
        assert_eq!(mmse_gaussian(1.0, 1.0), 0.5);
        assert!((mmse_gaussian(2.0, 3.0) - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_mi_examples() {
        let params = p(1.0, 1.0, 0.5);
        assert_eq!(conditional_mi_given_x(&params, 0.0).unwrap(), 0.0);
        assert!((conditional_mi_given_x(&params, 2.0).unwrap() - 0.5 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_all_regimes() {
        for params in [p(1.0, 1.0, 0.5), p(2.0, 0.4, 1.5), p(0.7, 3.0, 0.6)] {
            for k in 0..400 {
                let g = k as f64 * 0.025;
                let lhs = mi_gaussian_interference(&params, g).unwrap();
                let rhs = mi_x_branch(&params, g).unwrap() + conditional_mi_given_x(&params, g).unwrap()
                    - mi_x_given_z(&params, g).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12, "γ={g}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn good_code_examples() {
        let prof = GoodCodeProfile::unit(1.0).unwrap();
        assert_eq!(mi_good_code(&prof, 0.0), 0.0);
        assert!((mi_good_code(&prof, 1.0) - 0.5 * 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(mi_good_code(&prof, 5.0), mi_good_code(&prof, 1.0));
        let mac = GoodCodeProfile::mac_combined(1.0, 1.0).unwrap();
        assert_eq!(mmse_good_code(&mac, 0.5), 1.0);
        assert_eq!(mmse_good_code(&mac, 1.5), 0.0);
        assert_eq!(mmse_good_code(&mac, 1.0), 0.0);
        assert_eq!(mmse_good_code(&mac, 0.0), 2.0);
        assert!(GoodCodeProfile::new(0.0, 1.0).is_err());
    }

    /// Composite Simpson oracle on [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn good_code_integral_consistency() {
        let prof = GoodCodeProfile::new(1.5, 1.3).unwrap();
        for gamma in [0.3_f64, 1.0, 1.5, 2.0, 4.0] {
            // Stop just short of snr_design so the jump never lands on a node.
            let cut = gamma.min(prof.snr_design());
            let integral = simpson(|t| mmse_good_code(&prof, t), 0.0, cut * (1.0 - 1e-14), 2000);
            assert!((mi_good_code(&prof, gamma) - 0.5 * integral).abs() < 1e-10);
        }
    }

    #[test]
    fn fisher_examples() {
        for (d, a) in [(0.1, 0.5), (0.3, 2.0), (1e-4, 10.0)] {
            assert!((fisher_composite_noise_gaussian(1.0, d, a).unwrap() - 1.0).abs() < 1e-14);
        }
        let j = fisher_composite_noise_gaussian(2.0, 0.1, 0.5).unwrap();
        assert!((j - 1.0 / 1.05).abs() < 1e-14);
        let j0 = fisher_composite_noise(|_| 0.0, 0.1, 0.5).unwrap();
        assert!((j0 - 1.0 / 0.95).abs() < 1e-14);
        assert!(fisher_composite_noise_gaussian(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn weak_snr_params_and_bound() {
        let w = WeakSnrParams::new(1e-3, 0.5).unwrap();
        assert!(w.delta_prime < (w.delta * w.alpha).min(1.0));
        assert!(w.delta_hat < w.delta);
        assert_eq!(weak_snr_lower_bound(0.0, 3.0, &w).unwrap(), 0.0);
        let b = weak_snr_lower_bound(1.0, 1.0, &w).unwrap();
        let dp = 5e-4 / 1.0005;
        assert!((b - (dp - 0.5 * dp * dp)).abs() < 1e-18);
        assert!((b - (4.99750e-4 - 1.2487e-7)).abs() < 1e-9);
        // Ratio to δ approaches tr/2 with O(δ) error.
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d| {
                let w = WeakSnrParams::new(d, 0.5).unwrap();
                (weak_snr_lower_bound(3.0, 1.2, &w).unwrap() / d - 1.5).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn scaling_identity() {
        let base = |g: f64| mmse_gaussian(1.0, g);
        let id = mmse_scaling_identity(1.0, base).unwrap();
        let scaled = mmse_scaling_identity(2.0, base).unwrap();
        for g in [0.0, 0.3, 1.0, 4.0] {
            assert_eq!(id(g), base(g));
            assert!((scaled(g) - mmse_gaussian(2.0, g)).abs() < 1e-15);
        }
        // Scaling by c and then by 1/c is the identity.
        let there = mmse_scaling_identity(3.0, base).unwrap();
        let back = mmse_scaling_identity(1.0 / 3.0, there).unwrap();
        for g in [0.0, 0.7, 2.0, 9.0] {
            assert!((back(g) - base(g)).abs() < 1e-12);
        }
        assert!(mmse_scaling_identity(0.0, base).is_err());
    }

    #[test]
    fn scaling_shifts_zero_set() {
        // MMSE of √a·W vanishes from 1/(1+snr1); W itself from a/(1+snr1).
        let (a, snr1) = (0.5, 1.0);
        let scaled_signal = GoodCodeProfile::new(1.0 / (1.0 + snr1), 2.0).unwrap();
        let unscaled = mmse_scaling_identity(1.0 / a, move |g| mmse_good_code(&scaled_signal, g)).unwrap();
        let t = scaled_zero_threshold(1.0 / a, 1.0 / (1.0 + snr1)).unwrap();
        assert!((t - a / (1.0 + snr1)).abs() < 1e-15);
        assert!(unscaled(t * 0.999) > 0.0);
        assert_eq!(unscaled(t), 0.0);
        assert_eq!(unscaled(10.0 * t), 0.0);
    }

    #[test]
    fn incremental_identity_examples() {
        let params = p(1.0, 2.0, 1.0);
        let d = incremental_decomposition(&params, 0.2, 0.1).unwrap();
        for (vz, vx) in [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)] {
            let id = incremental_identity_gaussian(&d, vz, vx).unwrap();
            assert!(id.mi_difference > 0.0);
            assert!(id.abs_error() < 1e-10, "{id:?}");
        }
        // Unit powers: y_s has SNR s for z.
        let id = incremental_identity_gaussian(&d, 1.0, 1.0).unwrap();
        assert!((id.mi_difference - 0.5 * (1.3_f64 / 1.2).ln()).abs() < 1e-14);
    }

    #[test]
    fn weak_snr_mi_slope() {
        let cov_z = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8])).unwrap();
        let cov_x = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[1.1, -0.2, -0.2, 0.9])).unwrap();
        let target = cov_z.trace() / 4.0;
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d| (weak_snr_mi_gaussian(&cov_z, &cov_x, d, 0.5).unwrap() / d - target).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-3);
    }

    proptest! {
        #[test]
        fn mi_continuous_at_boundaries(snr1 in 0.0f64..5.0, snr2 in 0.0f64..5.0, a in 0.0f64..2.0) {
            let params = ChannelParams::new(snr1, snr2, a).unwrap();
            let jump = (slope_free_left(&params, 1.0, Regime::R1) - mi_gaussian_interference(&params, 1.0).unwrap()).abs();
            prop_assert!(jump <= 1e-12);
            if let Some(t) = third_regime_start(&params) {
                let jump = (slope_free_left(&params, t, Regime::R2) - mi_gaussian_interference(&params, t).unwrap()).abs();
                prop_assert!(jump <= 1e-12);
            }
        }

        #[test]
        fn mi_nondecreasing(snr1 in 0.0f64..5.0, snr2 in 0.0f64..5.0, a in 0.0f64..2.0, g in 0.0f64..20.0, dg in 0.0f64..2.0) {
            let params = ChannelParams::new(snr1, snr2, a).unwrap();
            prop_assert!(mi_gaussian_interference(&params, g + dg).unwrap() >= mi_gaussian_interference(&params, g).unwrap());
        }

        #[test]
        fn fisher_gaussian_identity(pw in 0.01f64..10.0, d in 1e-4f64..1.0, a in 0.0f64..0.99) {
            let j = fisher_composite_noise_gaussian(pw, d, a).unwrap();
            let da = d * a;
            prop_assert!((j * (da * pw + 1.0 - da) - 1.0).abs() <= 1e-12);
        }
    }
}
