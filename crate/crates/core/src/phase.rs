//! RIS phase profiles and the instantaneous SNR they produce.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDesign {
    LongTerm,
    ShortTerm,
    Equal,
    Random,
}

impl PhaseDesign {
    pub const ALL: [PhaseDesign; 4] = [
        PhaseDesign::ShortTerm,
        PhaseDesign::LongTerm,
        PhaseDesign::Equal,
        PhaseDesign::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhaseDesign::LongTerm => "long_term",
            PhaseDesign::ShortTerm => "short_term",
            PhaseDesign::Equal => "equal",
            PhaseDesign::Random => "random",
        }
    }
}

impl std::fmt::Display for PhaseDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PhaseDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "long_term" | "longterm" | "lt" => Ok(PhaseDesign::LongTerm),
            "short_term" | "shortterm" | "st" => Ok(PhaseDesign::ShortTerm),
            "equal" => Ok(PhaseDesign::Equal),
            "random" => Ok(PhaseDesign::Random),
            other => Err(Error::Config(format!("unknown phase design `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub thetas: Vec<f64>,
    pub design: PhaseDesign,
}

impl PhaseProfile {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `e^{jθ_m}` for every element.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.thetas.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }
}

/// Wraps an angle to `[−π, π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can round up to exactly 2π
    if t >= PI {
        t -= two_pi;
    }
    t
}

/// Argument with `arg(0) = 0`.
fn arg(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// Phases maximizing the average SNR: `θ_m = −arg(h̄*_sr,m) − arg(h̄_rd,m)`.
pub fn long_term_profile(los_sr: &[Complex64], los_rd: &[Complex64]) -> Result<PhaseProfile> {
    if los_sr.len() != los_rd.len() {
        return Err(Error::Config(format!(
            "LoS vectors differ in length ({} vs {})",
            los_sr.len(),
            los_rd.len()
        )));
    }
    let mut thetas = Vec::with_capacity(los_sr.len());
    for (i, (s, r)) in los_sr.iter().zip(los_rd).enumerate() {
        if s.norm_sqr() == 0.0 || r.norm_sqr() == 0.0 {
            return Err(Error::DegenerateLos { index: i });
        }
        thetas.push(wrap_phase(-arg(s.conj()) - arg(*r)));
    }
    Ok(PhaseProfile {
        thetas,
        design: PhaseDesign::LongTerm,
    })
}

/// Phases co-phasing every cascaded path with the direct link:
/// `θ_m = arg(h_sd) − arg(h*_sr,m) − arg(h_rd,m)`.
pub fn short_term_profile(h_sd: Complex64, h_sr: &[Complex64], h_rd: &[Complex64]) -> Result<PhaseProfile> {
    if h_sr.len() != h_rd.len() {
        return Err(Error::Config(format!(
            "channel vectors differ in length ({} vs {})",
            h_sr.len(),
            h_rd.len()
        )));
    }
    let mut thetas = Vec::with_capacity(h_sr.len());
    short_term_thetas_into(h_sd, h_sr, h_rd, &mut thetas);
    Ok(PhaseProfile {
        thetas,
        design: PhaseDesign::ShortTerm,
    })
}

pub(crate) fn short_term_thetas_into(h_sd: Complex64, h_sr: &[Complex64], h_rd: &[Complex64], out: &mut Vec<f64>) {
    let a = arg(h_sd);
    out.clear();
    out.extend(
        h_sr.iter()
            .zip(h_rd)
            .map(|(s, r)| wrap_phase(a - arg(s.conj()) - arg(*r))),
    );
}

pub fn equal_profile(m: usize) -> PhaseProfile {
    PhaseProfile {
        thetas: vec![0.0; m],
        design: PhaseDesign::Equal,
    }
}

/// I.i.d. uniform phases on `[−π, π)`.
pub fn random_profile(m: usize, stream: &mut RandomStream) -> PhaseProfile {
    let mut thetas = Vec::with_capacity(m);
    random_thetas_into(m, stream, &mut thetas);
    PhaseProfile {
        thetas,
        design: PhaseDesign::Random,
    }
}

pub(crate) fn random_thetas_into(m: usize, stream: &mut RandomStream, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..m).map(|_| stream.uniform_in(-PI, PI)));
}

/// Cascaded channel `h_srᴴ Φ h_rd = Σ_m h*_sr,m e^{jθ_m} h_rd,m`.
pub fn cascaded_gain(h_sr: &[Complex64], thetas: &[f64], h_rd: &[Complex64]) -> Complex64 {
    h_sr.iter()
        .zip(thetas)
        .zip(h_rd)
        .map(|((s, &t), r)| s.conj() * Complex64::from_polar(1.0, t) * r)
        .sum()
}

/// `ν |h_sd + h_srᴴ Φ h_rd|²`.
pub fn instantaneous_snr(real: &ChannelRealization, prof: &PhaseProfile, nu: f64) -> Result<f64> {
    if real.h_sr.len() != prof.len() || real.h_rd.len() != prof.len() {
        return Err(Error::Config(format!(
            "profile has {} phases but the channel has {} / {} entries",
            prof.len(),
            real.h_sr.len(),
            real.h_rd.len()
        )));
    }
    Ok(snr_unchecked(real, &prof.thetas, nu))
}

pub(crate) fn snr_unchecked(real: &ChannelRealization, thetas: &[f64], nu: f64) -> f64 {
    nu * (real.h_sd + cascaded_gain(&real.h_sr, thetas, &real.h_rd)).norm_sqr()
}

/// `ν (|h_sd| + Σ_m |h_sr,m||h_rd,m|)²`, the SNR reached by the short-term
/// profile.
pub fn optimal_snr(real: &ChannelRealization, nu: f64) -> f64 {
    let sum: f64 = real.h_sr.iter().zip(&real.h_rd).map(|(s, r)| s.norm() * r.norm()).sum();
    let a = real.h_sd.norm() + sum;
    nu * a * a
}
