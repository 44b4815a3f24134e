//! Monte Carlo estimates used to check the closed forms.
//!
//! Trials are split into chunks of [`CHUNK_SIZE`]; chunk `c` draws from the
//! substream seeded with `seed ^ c`. Chunks run in parallel but are reduced in
//! chunk order, so every estimate is a pure function of its inputs whatever
//! the thread count.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::GammaApprox;
use crate::channel::{link_stats, ChannelRealization, ChannelSampler, ScenarioConfig};
use crate::error::{Error, Result};
use crate::phase::{
    cascaded_gain, long_term_profile, random_thetas_into, short_term_thetas_into, snr_unchecked, PhaseDesign,
    PhaseProfile,
};
use crate::rng::RandomStream;

pub const CHUNK_SIZE: usize = 4096;
pub const MIN_TRIALS: usize = 1_000;
pub const MIN_MOMENT_TRIALS: usize = 10_000;
pub const MIN_CDF_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    /// Sample standard deviation over `√trials`.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Mean and sum of squared deviations of one chunk.
#[derive(Debug, Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = values.clone().fold((0.0, 0.0), |(n, s), v| (n + 1.0, s + v));
        if n == 0.0 {
            return Self { n, mean: 0.0, m2: 0.0 };
        }
        let mean = sum / n;
        let m2 = values.map(|v| (v - mean) * (v - mean)).sum();
        Self { n, mean, m2 }
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

fn estimate(chunks: &[Vec<f64>], seed: u64, f: impl Fn(f64) -> f64) -> McEstimate {
    let total = chunks
        .iter()
        .map(|c| Moments::of(c.iter().map(|&v| f(v))))
        .fold(Moments { n: 0.0, mean: 0.0, m2: 0.0 }, Moments::merge);
    let std_error = if total.n > 1.0 {
        (total.m2 / (total.n - 1.0)).sqrt() / total.n.sqrt()
    } else {
        0.0
    };
    McEstimate {
        value: total.mean,
        std_error,
        trials: total.n as usize,
        seed,
    }
}

/// Runs `trial` over `trials` draws, chunked and seeded as described in the
/// module docs, and returns the per-trial values grouped by chunk.
fn run_chunks<S, I, F>(trials: usize, seed: u64, init: I, trial: F) -> Vec<Vec<f64>>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &mut RandomStream) -> f64 + Sync,
{
    let n_chunks = trials.div_ceil(CHUNK_SIZE);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_SIZE.min(trials - c * CHUNK_SIZE);
            let mut stream = RandomStream::substream(seed, c as u64);
            let mut state = init();
            (0..n).map(|_| trial(&mut state, &mut stream)).collect()
        })
        .collect()
}

/// Per-trial SNR generator for one scenario and design.
struct SnrEngine {
    sampler: ChannelSampler,
    design: PhaseDesign,
    fixed: Vec<f64>,
    nu: f64,
}

struct Scratch {
    real: ChannelRealization,
    thetas: Vec<f64>,
}

impl SnrEngine {
    fn new(cfg: &ScenarioConfig, design: PhaseDesign) -> Result<Self> {
        let stats = link_stats(cfg)?;
        let sampler = ChannelSampler::new(cfg, &stats)?;
        let fixed = match design {
            // Depends only on the LoS part, so it is computed once.
            PhaseDesign::LongTerm => long_term_profile(sampler.los_sr(), sampler.los_rd())?.thetas,
            _ => vec![0.0; sampler.m()],
        };
        Ok(Self {
            sampler,
            design,
            fixed,
            nu: stats.nu,
        })
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            real: ChannelRealization {
                h_sd: Complex64::new(0.0, 0.0),
                h_sr: Vec::with_capacity(self.sampler.m()),
                h_rd: Vec::with_capacity(self.sampler.m()),
                seed_tag: 0,
            },
            thetas: Vec::with_capacity(self.sampler.m()),
        }
    }

    /// Channels first, then (for the random design) the phases.
    fn draw(&self, s: &mut Scratch, stream: &mut RandomStream) -> f64 {
        self.sampler.sample_into(stream, &mut s.real);
        match self.design {
            PhaseDesign::LongTerm | PhaseDesign::Equal => snr_unchecked(&s.real, &self.fixed, self.nu),
            PhaseDesign::ShortTerm => {
                short_term_thetas_into(s.real.h_sd, &s.real.h_sr, &s.real.h_rd, &mut s.thetas);
                snr_unchecked(&s.real, &s.thetas, self.nu)
            }
            PhaseDesign::Random => {
                random_thetas_into(self.sampler.m(), stream, &mut s.thetas);
                snr_unchecked(&s.real, &s.thetas, self.nu)
            }
        }
    }
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return Err(Error::Config(format!("{trials} trials requested, at least {min} required")));
    }
    Ok(())
}

fn snr_chunks(cfg: &ScenarioConfig, design: PhaseDesign, trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let engine = SnrEngine::new(cfg, design)?;
    Ok(run_chunks(trials, seed, || engine.scratch(), |s, stream| engine.draw(s, stream)))
}

/// Instantaneous SNR samples in trial order.
pub fn snr_samples(cfg: &ScenarioConfig, design: PhaseDesign, trials: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(snr_chunks(cfg, design, trials, seed)?.concat())
}

/// Fraction of trials with `log₂(1+γ) ≥ ξ`; a trial exactly at the threshold
/// counts as covered.
pub fn estimate_coverage(
    cfg: &ScenarioConfig,
    design: PhaseDesign,
    target_rate: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials, MIN_TRIALS)?;
    if !(target_rate >= 0.0) || !target_rate.is_finite() {
        return Err(Error::domain("estimate_coverage", format!("target rate {target_rate}")));
    }
    let chunks = snr_chunks(cfg, design, trials, seed)?;
    Ok(coverage_from_chunks(&chunks, target_rate, seed))
}

fn coverage_from_chunks(chunks: &[Vec<f64>], target_rate: f64, seed: u64) -> McEstimate {
    let tau = crate::analytic::snr_threshold(target_rate);
    estimate(chunks, seed, |g| if g >= tau { 1.0 } else { 0.0 })
}

/// Coverage at several target rates from one set of draws.
pub fn estimate_coverage_curve(
    cfg: &ScenarioConfig,
    design: PhaseDesign,
    target_rates: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_trials(trials, MIN_TRIALS)?;
    let chunks = snr_chunks(cfg, design, trials, seed)?;
    Ok(target_rates
        .iter()
        .map(|&xi| coverage_from_chunks(&chunks, xi, seed))
        .collect())
}

/// Sample mean of `log₂(1+γ)`.
pub fn estimate_ergodic_rate(cfg: &ScenarioConfig, design: PhaseDesign, trials: usize, seed: u64) -> Result<McEstimate> {
    check_trials(trials, MIN_TRIALS)?;
    let chunks = snr_chunks(cfg, design, trials, seed)?;
    Ok(estimate(&chunks, seed, |g| g.ln_1p() / std::f64::consts::LN_2))
}

/// Sample second and fourth moments of `|h_srᴴ Φ h_rd|` for a fixed profile.
pub fn estimate_cascaded_moments(
    cfg: &ScenarioConfig,
    profile: &PhaseProfile,
    trials: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_trials(trials, MIN_MOMENT_TRIALS)?;
    let stats = link_stats(cfg)?;
    let sampler = ChannelSampler::new(cfg, &stats)?;
    if profile.len() != sampler.m() {
        return Err(Error::Config(format!(
            "profile has {} phases for {} elements",
            profile.len(),
            sampler.m()
        )));
    }
    let init = || ChannelRealization {
        h_sd: Complex64::new(0.0, 0.0),
        h_sr: Vec::with_capacity(sampler.m()),
        h_rd: Vec::with_capacity(sampler.m()),
        seed_tag: 0,
    };
    let chunks = run_chunks(trials, seed, init, |real, stream| {
        sampler.sample_into(stream, real);
        cascaded_gain(&real.h_sr, &profile.thetas, &real.h_rd).norm_sqr()
    });
    Ok((estimate(&chunks, seed, |x| x), estimate(&chunks, seed, |x| x * x)))
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_CDF_SAMPLES {
            return Err(Error::Config(format!(
                "{} samples, at least {MIN_CDF_SAMPLES} required",
                samples.len()
            )));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `sup_x |F_n(x) − F(x)|`, checked on both sides of every jump.
    pub fn sup_distance_to(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut sup = 0.0f64;
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            let mut j = i;
            while j < self.sorted.len() && self.sorted[j] == x {
                j += 1;
            }
            let f = cdf(x);
            sup = sup.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
            i = j;
        }
        sup
    }
}

/// Kolmogorov–Smirnov distance between the samples and the matched law.
pub fn sup_distance(cdf: &EmpiricalCdf, approx: &GammaApprox) -> f64 {
    cdf.sup_distance_to(|x| approx.cdf(x))
}

/// Writes one sample per line.
pub fn write_samples<W: Write>(mut out: W, samples: &[f64]) -> Result<()> {
    for v in samples {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}
