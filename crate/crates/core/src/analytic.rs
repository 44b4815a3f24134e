//! Closed-form performance of the long-term and short-term phase designs.
//!
//! The SNR under either design is approximated by a Gamma law matched to its
//! first two moments. Coverage is then a regularized upper incomplete gamma
//! and the ergodic rate a one-dimensional expectation.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::LinkStats;
use crate::error::{Error, Result};
use crate::phase::{cascaded_gain, PhaseDesign};
use crate::specfun::{gamma_q, hyp1f1, ln_gamma_unchecked, log_expectation_gamma, QuadratureRule};

/// Designs with a closed-form Gamma approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedDesign {
    LongTerm,
    ShortTerm,
}

impl MatchedDesign {
    pub fn name(self) -> &'static str {
        self.phase_design().name()
    }

    pub fn phase_design(self) -> PhaseDesign {
        match self {
            MatchedDesign::LongTerm => PhaseDesign::LongTerm,
            MatchedDesign::ShortTerm => PhaseDesign::ShortTerm,
        }
    }
}

impl TryFrom<PhaseDesign> for MatchedDesign {
    type Error = Error;

    fn try_from(d: PhaseDesign) -> Result<Self> {
        match d {
            PhaseDesign::LongTerm => Ok(MatchedDesign::LongTerm),
            PhaseDesign::ShortTerm => Ok(MatchedDesign::ShortTerm),
            other => Err(Error::Config(format!("no closed form for the {other} design"))),
        }
    }
}

impl std::fmt::Display for MatchedDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Second and fourth moments of the cascaded channel `h_srᴴ Φ h_rd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadedMoments {
    pub second: f64,
    pub fourth: f64,
    pub alpha_bar_sq: f64,
    pub delta: f64,
    pub a_tilde: f64,
}

/// `δ = |ᾱ|² + Mμκ̃` and `ã = 2M|ᾱ|²μκ̃ + M²μ²κ̃² + 2Mμ²κ̂ + 8|ᾱ|²μ`, where
/// `ᾱ = h̄_srᴴ Φ h̄_rd` is the LoS part of the cascaded channel.
pub fn cascaded_moments(stats: &LinkStats, m: usize, alpha_bar_sq: f64) -> CascadedMoments {
    let mf = m as f64;
    let mu = stats.mu;
    let kt = stats.kappa_tilde;
    let delta = alpha_bar_sq + mf * mu * kt;
    let a_tilde = 2.0 * mf * alpha_bar_sq * mu * kt
        + mf * mf * mu * mu * kt * kt
        + 2.0 * mf * mu * mu * stats.kappa_hat
        + 8.0 * alpha_bar_sq * mu;
    CascadedMoments {
        second: delta,
        fourth: delta * delta + a_tilde,
        alpha_bar_sq,
        delta,
        a_tilde,
    }
}

/// `|ᾱ|²` under the long-term profile: all LoS terms add in phase, giving
/// `μ M² κ_sr κ_rd`.
pub fn long_term_alpha_bar_sq(stats: &LinkStats, m: usize) -> f64 {
    let mf = m as f64;
    stats.mu * mf * mf * stats.kappa_sr * stats.kappa_rd
}

/// `|ᾱ|² = |h̄_srᴴ Φ h̄_rd|²` for an arbitrary profile.
pub fn alpha_bar_sq(los_sr: &[Complex64], thetas: &[f64], los_rd: &[Complex64]) -> f64 {
    cascaded_gain(los_sr, thetas, los_rd).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum Intermediates {
    LongTerm {
        o1: f64,
        o2: f64,
    },
    ShortTerm {
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        k_c: f64,
        w_c: f64,
        t_sr: f64,
        t_rd: f64,
    },
}

/// Gamma law `Gamma(shape, scale)` matched to the SNR mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaApprox {
    pub shape: f64,
    pub scale: f64,
    pub design: MatchedDesign,
    pub intermediates: Intermediates,
    /// Matched SNR mean.
    pub mean: f64,
    /// Matched SNR variance.
    pub variance: f64,
}

impl GammaApprox {
    /// A bare Gamma law with no derivation attached.
    pub fn from_shape_scale(shape: f64, scale: f64, design: MatchedDesign) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain("GammaApprox", format!("shape = {shape}, scale = {scale}")));
        }
        let intermediates = match design {
            MatchedDesign::LongTerm => Intermediates::LongTerm { o1: f64::NAN, o2: f64::NAN },
            MatchedDesign::ShortTerm => Intermediates::ShortTerm {
                c1: f64::NAN,
                c2: f64::NAN,
                c3: f64::NAN,
                c4: f64::NAN,
                k_c: f64::NAN,
                w_c: f64::NAN,
                t_sr: f64::NAN,
                t_rd: f64::NAN,
            },
        };
        Ok(Self {
            shape,
            scale,
            design,
            intermediates,
            mean: shape * scale,
            variance: shape * scale * scale,
        })
    }

    /// CDF of the matched law at SNR `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - gamma_q(self.shape, x / self.scale).unwrap_or(0.0)
        }
    }
}

/// Long-term design constants `(o₁, o₂)` normalized by `μ` and `μ²`.
pub(crate) fn long_term_o(stats: &LinkStats, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let kk = stats.kappa_sr * stats.kappa_rd;
    let kt = stats.kappa_tilde;
    let o1 = mf * mf * kk + kt * mf;
    let o2 = mf * mf * kk * (2.0 * mf * kt + 8.0) + mf * mf * kt * kt + 2.0 * mf * stats.kappa_hat;
    (o1, o2)
}

/// Gamma approximation of the long-term SNR.
///
/// Matches `E γ = ν(β_sd + o₁)` and `Var γ = ν²(β_sd² + o₂ + 2β_sd o₁)` with
/// `o₁ = δ` and `o₂ = ã` evaluated at the long-term `|ᾱ|²`.
pub fn gamma_approx_long_term(stats: &LinkStats, m: usize) -> Result<GammaApprox> {
    if stats.kappa_sr * stats.kappa_rd == 0.0 && m > 0 {
        return Err(Error::DegenerateLos { index: 0 });
    }
    let (n1, n2) = long_term_o(stats, m);
    let o1 = stats.mu * n1;
    let o2 = stats.mu * stats.mu * n2;
    let bsd = stats.beta_sd;
    let num = bsd + o1;
    let den = bsd * bsd + o2 + 2.0 * bsd * o1;
    let shape = num * num / den;
    let scale = stats.nu * den / num;
    check_matched(shape, scale)?;
    Ok(GammaApprox {
        shape,
        scale,
        design: MatchedDesign::LongTerm,
        intermediates: Intermediates::LongTerm { o1, o2 },
        mean: stats.nu * num,
        variance: stats.nu * stats.nu * den,
    })
}

/// `₁F₁(−½; 1; −κ)`, the normalized mean amplitude of a Rician hop.
pub(crate) fn rician_mean_factor(kappa: f64) -> Result<f64> {
    hyp1f1(-0.5, 1.0, -kappa)
}

/// Short-term constants that do not depend on the large-scale gains
/// `β_sr, β_rd`: returns `(c̃₂, c̃₄, t_sr, t_rd)` with `c₂ = c̃₂ √(β_sr β_rd)`
/// and `c₄ = c̃₄ β_sr β_rd`.
pub(crate) fn short_term_normalized(kappa_sr: f64, kappa_rd: f64, m: usize) -> Result<(f64, f64, f64, f64)> {
    use std::f64::consts::PI;
    let mf = m as f64;
    let t_sr = rician_mean_factor(kappa_sr)?;
    let t_rd = rician_mean_factor(kappa_rd)?;
    let kk = (kappa_sr + 1.0) * (kappa_rd + 1.0);
    let c2n = PI / 4.0 * mf * t_sr * t_rd / kk.sqrt();
    let c4n = mf * (kk - PI * PI / 16.0 * t_sr * t_sr * t_rd * t_rd) / kk;
    Ok((c2n, c4n, t_sr, t_rd))
}

/// Gamma approximation of the short-term SNR by double matching.
///
/// The amplitude `|h_sd| + Σ|h_sr,m||h_rd,m|` is first matched to
/// `Gamma(k_c, w_c)` through `c₁..c₄`; its square is then matched again, which
/// gives `k = k_c(k_c+1)/(2(2k_c+3))` and `w = 2ν w_c² (2k_c+3)`.
pub fn gamma_approx_short_term(stats: &LinkStats, m: usize) -> Result<GammaApprox> {
    use std::f64::consts::PI;
    let (c2n, c4n, t_sr, t_rd) = short_term_normalized(stats.kappa_sr, stats.kappa_rd, m)?;
    let t = stats.beta_sr * stats.beta_rd;
    let c1 = 0.5 * (PI * stats.beta_sd).sqrt();
    let c2 = c2n * t.sqrt();
    let c3 = (4.0 - PI) / 4.0 * stats.beta_sd;
    let c4 = c4n * t;
    let sum = c3 + c4;
    if !(sum > 0.0) {
        return Err(Error::MatchingFailure {
            c3,
            c4,
            sum,
            kappa_sr: stats.kappa_sr,
            kappa_rd: stats.kappa_rd,
        });
    }
    let k_c = (c1 + c2) * (c1 + c2) / sum;
    let w_c = sum / (c1 + c2);
    let shape = k_c * (k_c + 1.0) / (2.0 * (2.0 * k_c + 3.0));
    let scale = 2.0 * stats.nu * w_c * w_c * (2.0 * k_c + 3.0);
    check_matched(shape, scale)?;
    let w2 = w_c * w_c;
    Ok(GammaApprox {
        shape,
        scale,
        design: MatchedDesign::ShortTerm,
        intermediates: Intermediates::ShortTerm {
            c1,
            c2,
            c3,
            c4,
            k_c,
            w_c,
            t_sr,
            t_rd,
        },
        mean: stats.nu * w2 * k_c * (k_c + 1.0),
        variance: 2.0 * stats.nu * stats.nu * w2 * w2 * k_c * (k_c + 1.0) * (2.0 * k_c + 3.0),
    })
}

pub fn gamma_approx(stats: &LinkStats, m: usize, design: MatchedDesign) -> Result<GammaApprox> {
    match design {
        MatchedDesign::LongTerm => gamma_approx_long_term(stats, m),
        MatchedDesign::ShortTerm => gamma_approx_short_term(stats, m),
    }
}

fn check_matched(shape: f64, scale: f64) -> Result<()> {
    if shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("gamma matching", format!("shape = {shape}, scale = {scale}")))
    }
}

/// SNR threshold `2^ξ − 1` for a target rate `ξ` in b/s/Hz.
pub fn snr_threshold(target_rate: f64) -> f64 {
    target_rate.exp2() - 1.0
}

fn check_rate(func: &'static str, target_rate: f64) -> Result<()> {
    if !(target_rate >= 0.0) || !target_rate.is_finite() {
        return Err(Error::domain(func, format!("target rate {target_rate}")));
    }
    Ok(())
}

/// `P(log₂(1+γ) ≥ ξ) ≈ Γ(k, τ/w)/Γ(k)` with `τ = 2^ξ − 1`.
pub fn coverage_probability(approx: &GammaApprox, target_rate: f64) -> Result<f64> {
    check_rate("coverage_probability", target_rate)?;
    gamma_q(approx.shape, snr_threshold(target_rate) / approx.scale)
}

/// Large-shape expansion `1 − (τ/w)^k / (k² Γ(k))`, clamped to `[0, 1]`.
pub fn asymptotic_coverage(approx: &GammaApprox, target_rate: f64) -> Result<f64> {
    check_rate("asymptotic_coverage", target_rate)?;
    let k = approx.shape;
    if !(k >= 1.0) {
        return Err(Error::domain("asymptotic_coverage", format!("shape {k} < 1")));
    }
    let u = snr_threshold(target_rate) / approx.scale;
    if u == 0.0 {
        return Ok(1.0);
    }
    let ln_tail = k * u.ln() - 2.0 * k.ln() - ln_gamma_unchecked(k);
    Ok((1.0 - ln_tail.exp()).clamp(0.0, 1.0))
}

/// Order of the rule used by [`ergodic_rate`].
pub const ERGODIC_RULE_ORDER: usize = 64;

fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_legendre(ERGODIC_RULE_ORDER).expect("positive order"))
}

/// `E[log₂(1+γ)]` under the matched law.
pub fn ergodic_rate(approx: &GammaApprox) -> Result<f64> {
    ergodic_rate_with_rule(approx, default_rule())
}

pub fn ergodic_rate_with_rule(approx: &GammaApprox, rule: &QuadratureRule) -> Result<f64> {
    log_expectation_gamma(approx.shape, approx.scale, rule)
}
