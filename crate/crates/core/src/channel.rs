//! Geometry, large-scale propagation and fading draws for the
//! source → RIS → destination link.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Log-distance law `β(d) = K₀ · d^(−η)`, with `K₀` given in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossLaw {
    pub k0_db: f64,
    pub exponent: f64,
}

impl PathLossLaw {
    pub const fn new(k0_db: f64, exponent: f64) -> Self {
        Self { k0_db, exponent }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k0_db.is_finite() {
            return Err(Error::Config(format!("path-loss intercept {} is not finite", self.k0_db)));
        }
        if !(self.exponent > 1.0 && self.exponent <= 8.0) {
            return Err(Error::Config(format!(
                "path-loss exponent {} outside (1, 8]",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn gain(&self, distance: f64) -> Result<f64> {
        path_loss_linear(self, distance)
    }
}

/// Linear power gain `10^((K₀ − 10·η·log₁₀ d)/10)`.
pub fn path_loss_linear(law: &PathLossLaw, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::domain("path_loss_linear", format!("distance = {distance}")));
    }
    Ok(10f64.powf((law.k0_db - 10.0 * law.exponent * distance.log10()) / 10.0))
}

/// Distance-dependent Rician factor `10^(intercept − slope·d)`.
pub fn rician_factor(intercept: f64, slope: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::domain("rician_factor", format!("distance = {distance}")));
    }
    Ok(10f64.powf(intercept - slope * distance))
}

/// Azimuth and elevation, in radians, of the direction from `from` to `to`.
///
/// Azimuth is measured in the x–y plane from the x axis, elevation from the
/// x–y plane towards +z.
pub fn direction_angles(from: &Position3, to: &Position3) -> Result<(f64, f64)> {
    let (dx, dy, dz) = (to.x - from.x, to.y - from.y, to.z - from.z);
    let horizontal = dx.hypot(dy);
    if horizontal == 0.0 && dz == 0.0 {
        return Err(Error::Geometry("direction between coincident points".into()));
    }
    Ok((dy.atan2(dx), dz.atan2(horizontal)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub source: Position3,
    pub destination: Position3,
    pub ris: Position3,
    pub m_elements: usize,
    /// Elements per RIS row.
    pub n_h: usize,
    pub wavelength: f64,
    /// Inter-element spacing in meters; half a wavelength when absent.
    #[serde(default)]
    pub element_spacing: Option<f64>,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub direct_law: PathLossLaw,
    pub indirect_law_sr: PathLossLaw,
    pub indirect_law_rd: PathLossLaw,
    #[serde(default = "default_rician_intercept")]
    pub rician_intercept: f64,
    #[serde(default = "default_rician_slope")]
    pub rician_slope: f64,
    /// (azimuth, elevation) of the source as seen from the RIS; derived from
    /// the geometry when absent.
    #[serde(default)]
    pub angles_sr: Option<(f64, f64)>,
    /// (azimuth, elevation) of the destination as seen from the RIS.
    #[serde(default)]
    pub angles_rd: Option<(f64, f64)>,
}

fn default_rician_intercept() -> f64 {
    1.3
}

fn default_rician_slope() -> f64 {
    0.003
}

/// Carrier wavelength at 1.8 GHz.
pub const WAVELENGTH_1800MHZ: f64 = 299_792_458.0 / 1.8e9;

impl ScenarioConfig {
    /// The reference deployment: 1.8 GHz carrier, 20 dBm transmit power,
    /// −94 dBm noise, direct law (−33.1 dB, η = 3.5), indirect laws
    /// (−25.5 dB, η = 2.4) and Rician law 10^(1.3 − 0.003·d).
    pub fn reference(
        source: Position3,
        ris: Position3,
        destination: Position3,
        m_elements: usize,
        n_h: usize,
    ) -> Self {
        Self {
            source,
            destination,
            ris,
            m_elements,
            n_h,
            wavelength: WAVELENGTH_1800MHZ,
            element_spacing: None,
            tx_power_dbm: 20.0,
            noise_power_dbm: -94.0,
            direct_law: PathLossLaw::new(-33.1, 3.5),
            indirect_law_sr: PathLossLaw::new(-25.5, 2.4),
            indirect_law_rd: PathLossLaw::new(-25.5, 2.4),
            rician_intercept: default_rician_intercept(),
            rician_slope: default_rician_slope(),
            angles_sr: None,
            angles_rd: None,
        }
    }

    pub fn with_ris(&self, ris: Position3) -> Self {
        Self { ris, ..self.clone() }
    }

    pub fn with_destination(&self, destination: Position3) -> Self {
        Self { destination, ..self.clone() }
    }

    pub fn with_elements(&self, m_elements: usize, n_h: usize) -> Self {
        Self {
            m_elements,
            n_h,
            ..self.clone()
        }
    }

    pub fn spacing(&self) -> f64 {
        self.element_spacing.unwrap_or(0.5 * self.wavelength)
    }

    /// Checks every field invariant.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("source", &self.source), ("destination", &self.destination), ("ris", &self.ris)] {
            if !p.is_finite() {
                return Err(Error::Config(format!("{name} position is not finite")));
            }
        }
        if self.n_h == 0 {
            return Err(Error::Config("n_h must be positive".into()));
        }
        if self.m_elements % self.n_h != 0 {
            return Err(Error::Config(format!(
                "m_elements = {} is not divisible by n_h = {}",
                self.m_elements, self.n_h
            )));
        }
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::Config(format!("wavelength {} must be positive", self.wavelength)));
        }
        if let Some(s) = self.element_spacing {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config(format!("element spacing {s} must be positive")));
            }
        }
        if !(self.tx_power_dbm.is_finite() && self.noise_power_dbm.is_finite()) {
            return Err(Error::Config("powers must be finite".into()));
        }
        if self.tx_power_dbm <= self.noise_power_dbm {
            return Err(Error::Config(format!(
                "tx_power_dbm = {} must exceed noise_power_dbm = {}",
                self.tx_power_dbm, self.noise_power_dbm
            )));
        }
        self.direct_law.validate()?;
        self.indirect_law_sr.validate()?;
        self.indirect_law_rd.validate()?;
        if !(self.rician_intercept.is_finite() && self.rician_slope.is_finite()) {
            return Err(Error::Config("Rician law parameters must be finite".into()));
        }
        for angles in [self.angles_sr, self.angles_rd].into_iter().flatten() {
            if !(angles.0.is_finite() && angles.1.is_finite()) {
                return Err(Error::Config("angles must be finite".into()));
            }
        }
        self.check_distances()?;
        Ok(())
    }

    fn check_distances(&self) -> Result<()> {
        if self.source.distance(&self.ris) <= 0.0 {
            return Err(Error::Geometry("RIS coincides with the source".into()));
        }
        if self.ris.distance(&self.destination) <= 0.0 {
            return Err(Error::Geometry("RIS coincides with the destination".into()));
        }
        if self.source.distance(&self.destination) <= 0.0 {
            return Err(Error::Geometry("source coincides with the destination".into()));
        }
        Ok(())
    }

    /// LoS angles for the two hops, explicit or derived from the geometry.
    pub fn los_angles(&self) -> Result<((f64, f64), (f64, f64))> {
        let sr = match self.angles_sr {
            Some(a) => a,
            None => direction_angles(&self.ris, &self.source)?,
        };
        let rd = match self.angles_rd {
            Some(a) => a,
            None => direction_angles(&self.ris, &self.destination)?,
        };
        Ok((sr, rd))
    }

    /// LoS vectors `(h̄_sr, h̄_rd)` for the given statistics.
    pub fn los_vectors(&self, stats: &LinkStats) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let ((az_sr, el_sr), (az_rd, el_rd)) = self.los_angles()?;
        let spacing = self.spacing();
        let sr = los_vector_with_spacing(
            az_sr,
            el_sr,
            self.m_elements,
            self.n_h,
            self.wavelength,
            spacing,
            stats.kappa_sr,
            stats.beta_sr,
        )?;
        let rd = los_vector_with_spacing(
            az_rd,
            el_rd,
            self.m_elements,
            self.n_h,
            self.wavelength,
            spacing,
            stats.kappa_rd,
            stats.beta_rd,
        )?;
        Ok((sr, rd))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkStats {
    pub d_sd: f64,
    pub d_sr: f64,
    pub d_rd: f64,
    pub beta_sd: f64,
    pub beta_sr: f64,
    pub beta_rd: f64,
    pub kappa_sr: f64,
    pub kappa_rd: f64,
    pub mu: f64,
    pub kappa_tilde: f64,
    pub kappa_hat: f64,
    pub nu: f64,
}

impl LinkStats {
    /// Assembles the statistics from the primary quantities, deriving `μ`,
    /// `κ̃` and `κ̂`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d_sd: f64,
        d_sr: f64,
        d_rd: f64,
        beta_sd: f64,
        beta_sr: f64,
        beta_rd: f64,
        kappa_sr: f64,
        kappa_rd: f64,
        nu: f64,
    ) -> Self {
        Self {
            d_sd,
            d_sr,
            d_rd,
            beta_sd,
            beta_sr,
            beta_rd,
            kappa_sr,
            kappa_rd,
            mu: beta_sr * beta_rd / ((kappa_sr + 1.0) * (kappa_rd + 1.0)),
            kappa_tilde: kappa_sr + kappa_rd + 1.0,
            kappa_hat: 1.0 + 2.0 * kappa_sr + 2.0 * kappa_rd,
            nu,
        }
    }

    /// Same statistics with the Rician factors replaced.
    pub fn with_kappas(&self, kappa_sr: f64, kappa_rd: f64) -> Self {
        Self::from_parts(
            self.d_sd,
            self.d_sr,
            self.d_rd,
            self.beta_sd,
            self.beta_sr,
            self.beta_rd,
            kappa_sr,
            kappa_rd,
            self.nu,
        )
    }
}

/// Distances, gains, Rician factors and transmit SNR of a scenario.
pub fn link_stats(cfg: &ScenarioConfig) -> Result<LinkStats> {
    let d_sr = cfg.source.distance(&cfg.ris);
    let d_rd = cfg.ris.distance(&cfg.destination);
    let d_sd = cfg.source.distance(&cfg.destination);
    if !(d_sr > 0.0) {
        return Err(Error::Geometry("RIS coincides with the source".into()));
    }
    if !(d_rd > 0.0) {
        return Err(Error::Geometry("RIS coincides with the destination".into()));
    }
    if !(d_sd > 0.0) {
        return Err(Error::Geometry("source coincides with the destination".into()));
    }
    let kappa_sr = rician_factor(cfg.rician_intercept, cfg.rician_slope, d_sr)?;
    let kappa_rd = rician_factor(cfg.rician_intercept, cfg.rician_slope, d_rd)?;
    Ok(LinkStats::from_parts(
        d_sd,
        d_sr,
        d_rd,
        path_loss_linear(&cfg.direct_law, d_sd)?,
        path_loss_linear(&cfg.indirect_law_sr, d_sr)?,
        path_loss_linear(&cfg.indirect_law_rd, d_rd)?,
        kappa_sr,
        kappa_rd,
        10f64.powf((cfg.tx_power_dbm - cfg.noise_power_dbm) / 10.0),
    ))
}

/// LoS vector with half-wavelength element spacing.
pub fn los_vector(
    azimuth: f64,
    elevation: f64,
    m: usize,
    n_h: usize,
    wavelength: f64,
    kappa: f64,
    beta: f64,
) -> Result<Vec<Complex64>> {
    los_vector_with_spacing(azimuth, elevation, m, n_h, wavelength, 0.5 * wavelength, kappa, beta)
}

/// `√(κβ/(κ+1)) · exp(j k(ψ,φ)ᵀ u_m)` for `m = 1..M`, where the element index
/// `u_m = [0, (m−1) mod N_H, ⌊(m−1)/N_H⌋]` is scaled by `spacing`.
#[allow(clippy::too_many_arguments)]
pub fn los_vector_with_spacing(
    azimuth: f64,
    elevation: f64,
    m: usize,
    n_h: usize,
    wavelength: f64,
    spacing: f64,
    kappa: f64,
    beta: f64,
) -> Result<Vec<Complex64>> {
    if n_h == 0 || m % n_h != 0 {
        return Err(Error::Config(format!("m = {m} is not divisible by n_h = {n_h}")));
    }
    let amplitude = (kappa * beta / (kappa + 1.0)).sqrt();
    let wave = 2.0 * PI / wavelength;
    // Only the y and z wave-vector components meet a nonzero index.
    let ky = wave * azimuth.sin() * elevation.cos();
    let kz = wave * azimuth.sin();
    Ok((0..m)
        .map(|i| {
            let col = (i % n_h) as f64 * spacing;
            let row = (i / n_h) as f64 * spacing;
            Complex64::from_polar(amplitude, ky * col + kz * row)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_sd: Complex64,
    pub h_sr: Vec<Complex64>,
    pub h_rd: Vec<Complex64>,
    pub seed_tag: u64,
}

/// Draws realizations of one scenario, with the LoS parts computed once.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    los_sr: Vec<Complex64>,
    los_rd: Vec<Complex64>,
    sd_amp: f64,
    sr_amp: f64,
    rd_amp: f64,
}

impl ChannelSampler {
    pub fn new(cfg: &ScenarioConfig, stats: &LinkStats) -> Result<Self> {
        let (los_sr, los_rd) = cfg.los_vectors(stats)?;
        Ok(Self {
            los_sr,
            los_rd,
            sd_amp: stats.beta_sd.sqrt(),
            sr_amp: (stats.beta_sr / (stats.kappa_sr + 1.0)).sqrt(),
            rd_amp: (stats.beta_rd / (stats.kappa_rd + 1.0)).sqrt(),
        })
    }

    pub fn los_sr(&self) -> &[Complex64] {
        &self.los_sr
    }

    pub fn los_rd(&self) -> &[Complex64] {
        &self.los_rd
    }

    pub fn m(&self) -> usize {
        self.los_sr.len()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> ChannelRealization {
        let mut out = ChannelRealization {
            h_sd: Complex64::new(0.0, 0.0),
            h_sr: Vec::with_capacity(self.m()),
            h_rd: Vec::with_capacity(self.m()),
            seed_tag: stream.seed(),
        };
        self.sample_into(stream, &mut out);
        out
    }

    /// Refills `out` in place. Draw order: `h_sd`, then the `h_sr` entries,
    /// then the `h_rd` entries.
    pub fn sample_into(&self, stream: &mut RandomStream, out: &mut ChannelRealization) {
        out.seed_tag = stream.seed();
        out.h_sd = self.sd_amp * stream.complex_normal();
        out.h_sr.clear();
        out.h_sr
            .extend(self.los_sr.iter().map(|l| l + self.sr_amp * stream.complex_normal()));
        out.h_rd.clear();
        out.h_rd
            .extend(self.los_rd.iter().map(|l| l + self.rd_amp * stream.complex_normal()));
    }
}

/// One fading realization of the scenario.
pub fn sample_channels(
    cfg: &ScenarioConfig,
    stats: &LinkStats,
    stream: &mut RandomStream,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(cfg, stats)?.sample(stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1() -> ScenarioConfig {
        ScenarioConfig::reference(
            Position3::new(0.0, 0.0, 0.0),
            Position3::new(27.0, 25.0, 25.0),
            Position3::new(180.0, 100.0, 25.0),
            64,
            8,
        )
    }

    #[test]
    fn path_loss_reference_distance() {
        let law = PathLossLaw::new(-25.5, 2.4);
        assert_relative_eq!(path_loss_linear(&law, 1.0).unwrap(), 10f64.powf(-2.55), max_relative = 1e-14);
        assert_relative_eq!(path_loss_linear(&law, 1.0).unwrap(), 2.818_382_931_264_455e-3, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_direct_at_100m() {
        // 10^((−33.1 − 35·2)/10) = 10^(−10.31)
        let law = PathLossLaw::new(-33.1, 3.5);
        assert_relative_eq!(path_loss_linear(&law, 100.0).unwrap(), 4.897_788_193_684_456e-11, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let law = PathLossLaw::new(-25.5, 2.4);
        assert!(path_loss_linear(&law, 0.0).is_err());
        assert!(path_loss_linear(&law, -1.0).is_err());
    }

    #[test]
    fn rician_law_examples() {
        assert_relative_eq!(rician_factor(1.3, 0.003, 100.0).unwrap(), 10.0, max_relative = 1e-14);
        assert_relative_eq!(rician_factor(1.3, 0.003, 1e-12).unwrap(), 19.952_623_149_688_797, max_relative = 1e-10);
        assert_eq!(rician_factor(0.7, 0.0, 3.0).unwrap(), rician_factor(0.7, 0.0, 300.0).unwrap());
    }

    #[test]
    fn los_vector_basics() {
        let v = los_vector(0.3, 0.2, 4, 2, 0.1667, 0.0, 1e-3).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));

        let amp = (4.0f64 * 1e-3 / 5.0).sqrt();
        let v = los_vector(0.0, 0.0, 6, 3, 0.1667, 4.0, 1e-3).unwrap();
        assert_eq!(v[0], Complex64::new(amp, 0.0));
        for z in &v {
            assert_relative_eq!(z.norm(), amp, max_relative = 1e-14);
        }
        assert!(matches!(los_vector(0.0, 0.0, 10, 4, 1.0, 1.0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn los_vector_transcription() {
        // Entries from an independent transcription of the steering model
        // (half-wavelength spacing, λ = 0.1667).
        let v = los_vector(0.3, 0.2, 4, 2, 0.1667, 4.0, 1e-3).unwrap();
        let amp = (4.0f64 * 1e-3 / 5.0).sqrt();
        let expect = [
            (0.028_284_271_247_461_9, 0.0),
            (0.017_361_632_471_184_156, 0.022_328_764_362_040_367),
            (0.016_945_460_952_800_55, 0.022_646_221_607_524_553),
            (-0.007_476_285_282_287_874, 0.027_278_290_972_453_642),
        ];
        for (z, (re, im)) in v.iter().zip(expect) {
            assert_relative_eq!(z.re, re, epsilon = 1e-12 * amp);
            assert_relative_eq!(z.im, im, epsilon = 1e-12 * amp);
        }
    }

    #[test]
    fn fig1_distances() {
        let s = link_stats(&fig1()).unwrap();
        assert_relative_eq!(s.d_sr, 1979f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.d_rd, 29034f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.mu, s.beta_sr * s.beta_rd / ((s.kappa_sr + 1.0) * (s.kappa_rd + 1.0)));
        assert_relative_eq!(s.nu, 10f64.powf(11.4), max_relative = 1e-12);
    }

    #[test]
    fn unit_offset_and_symmetry() {
        let mut cfg = fig1();
        cfg.ris = Position3::new(1.0, 0.0, 0.0);
        assert_eq!(link_stats(&cfg).unwrap().d_sr, 1.0);

        cfg.source = Position3::new(-10.0, 0.0, 0.0);
        cfg.destination = Position3::new(10.0, 0.0, 0.0);
        cfg.ris = Position3::new(0.0, 5.0, 3.0);
        let s = link_stats(&cfg).unwrap();
        assert_eq!(s.d_sr, s.d_rd);
        assert_eq!(s.beta_sr, s.beta_rd);
    }

    #[test]
    fn coincident_nodes_rejected() {
        let mut cfg = fig1();
        cfg.ris = cfg.source;
        assert!(matches!(link_stats(&cfg), Err(Error::Geometry(_))));
        let mut cfg = fig1();
        cfg.ris = cfg.destination;
        assert!(matches!(link_stats(&cfg), Err(Error::Geometry(_))));
    }

    #[test]
    fn validation() {
        assert!(fig1().validate().is_ok());
        let cfg = fig1().with_elements(10, 4);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = fig1();
        cfg.tx_power_dbm = -100.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pure_los_limit() {
        let mut cfg = fig1();
        cfg.rician_intercept = 9.0;
        cfg.rician_slope = 0.0;
        let stats = link_stats(&cfg).unwrap();
        let mut stream = RandomStream::new(1);
        let r = sample_channels(&cfg, &stats, &mut stream).unwrap();
        let (los_sr, _) = cfg.los_vectors(&stats).unwrap();
        for (h, l) in r.h_sr.iter().zip(&los_sr) {
            assert!((h - l).norm() <= 1e-3 * l.norm());
        }
    }
}
