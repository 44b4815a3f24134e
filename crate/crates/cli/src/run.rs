//! Experiment runners. Each returns the full CSV text so nothing is written
//! unless the whole experiment succeeds.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use riscov_core::analytic::{
    alpha_bar_sq, cascaded_moments, coverage_probability, ergodic_rate, gamma_approx, snr_threshold, MatchedDesign,
};
use riscov_core::channel::{link_stats, LinkStats, Position3, ScenarioConfig};
use riscov_core::montecarlo::{estimate_cascaded_moments, estimate_coverage_curve, snr_samples};
use riscov_core::phase::{equal_profile, long_term_profile, random_profile, PhaseDesign};
use riscov_core::placement::{coverage_landscape, mean_coverage_landscape, optimize_placement, write_landscape_csv};
use riscov_core::rng::RandomStream;
use riscov_core::scenario::stratified_destinations;
use riscov_core::specfun::{log_expectation_gamma, QuadratureRule};

use crate::spec::{Destinations, ExperimentSpec, Params};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of the `idx`-th destination's Monte Carlo run.
fn destination_seed(seed: u64, idx: usize) -> u64 {
    seed ^ (idx as u64 + 1).wrapping_mul(GOLDEN)
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
struct Num(f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Largest divisor of `m` not above `√m`: the squarest `n_h × n_v` layout.
pub fn squarest_rows(m: usize) -> usize {
    (1..=m).take_while(|d| d * d <= m).filter(|d| m % d == 0).last().unwrap_or(1)
}

fn sample_destinations(d: &Destinations, seed: u64) -> Vec<Position3> {
    stratified_destinations(&d.region, d.per_axis, seed)
}

fn closed_form(design: PhaseDesign) -> Option<MatchedDesign> {
    MatchedDesign::try_from(design).ok()
}

/// SNR without the RIS is exponential with mean `ν β_sd`.
fn no_ris(stats: &LinkStats, target_rate: f64, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let mean = stats.nu * stats.beta_sd;
    let coverage = (-snr_threshold(target_rate) / mean).exp();
    Ok((coverage, log_expectation_gamma(1.0, mean, rule)?))
}

/// Coverage and rate estimates (value, standard error) from one set of draws.
fn mc_point(samples: &[f64], target_rate: f64) -> [(f64, f64); 2] {
    let tau = snr_threshold(target_rate);
    let n = samples.len() as f64;
    let stat = |f: &dyn Fn(f64) -> f64| {
        let mean = samples.iter().map(|&g| f(g)).sum::<f64>() / n;
        let var = samples.iter().map(|&g| (f(g) - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    [
        stat(&|g| if g >= tau { 1.0 } else { 0.0 }),
        stat(&|g| g.ln_1p() / std::f64::consts::LN_2),
    ]
}

pub fn run(spec: &ExperimentSpec) -> Result<String> {
    let cfg = &spec.scenario;
    match &spec.params {
        Params::CoverageVsRate { rates, designs } => coverage_vs_rate(cfg, rates, designs, spec),
        Params::RateCdf { destinations, designs } => rate_cdf(cfg, destinations, designs, spec),
        Params::SweepM {
            m_list,
            rate,
            destinations,
            designs,
        } => sweep_m(cfg, m_list, *rate, destinations, designs, spec),
        Params::PlacementRun(pcfg) => {
            let trace = optimize_placement(cfg, pcfg).context("placement")?;
            let mut out = Vec::new();
            trace.write_csv(&mut out)?;
            Ok(String::from_utf8(out)?)
        }
        Params::Landscape {
            grid,
            design,
            rate,
            destinations,
        } => {
            let nodes = match destinations {
                Some(d) => mean_coverage_landscape(cfg, &sample_destinations(d, spec.seed), *design, *rate, grid),
                None => coverage_landscape(cfg, *design, *rate, grid),
            }
            .context("landscape")?;
            let mut out = Vec::new();
            write_landscape_csv(&mut out, &nodes)?;
            Ok(String::from_utf8(out)?)
        }
        Params::ValidateMoments { m_list, profiles } => validate_moments(cfg, m_list, profiles, spec),
    }
}

fn coverage_vs_rate(cfg: &ScenarioConfig, rates: &[f64], designs: &[PhaseDesign], spec: &ExperimentSpec) -> Result<String> {
    let stats = link_stats(cfg)?;
    let trials = spec.trials()?;
    let mut out = String::from("xi,design,closed_form,mc,mc_stderr\n");
    for &design in designs {
        let approx = closed_form(design)
            .map(|d| gamma_approx(&stats, cfg.m_elements, d))
            .transpose()
            .with_context(|| format!("{design} closed form"))?;
        let mc = estimate_coverage_curve(cfg, design, rates, trials, spec.seed)?;
        for (&xi, e) in rates.iter().zip(&mc) {
            let cf = match &approx {
                Some(a) => Num(coverage_probability(a, xi)?).to_string(),
                None => String::new(),
            };
            writeln!(out, "{},{design},{cf},{},{}", Num(xi), Num(e.value), Num(e.std_error))?;
        }
    }
    Ok(out)
}

fn rate_cdf(cfg: &ScenarioConfig, dest: &Destinations, designs: &[PhaseDesign], spec: &ExperimentSpec) -> Result<String> {
    let rule = QuadratureRule::gauss_legendre(riscov_core::analytic::ERGODIC_RULE_ORDER)?;
    let points = sample_destinations(dest, spec.seed);
    let mut columns: Vec<(String, &str, Vec<f64>)> = vec![("no_ris".into(), "exact", Vec::new())];
    for &design in designs {
        let method = if closed_form(design).is_some() { "closed_form" } else { "mc" };
        columns.push((design.to_string(), method, Vec::new()));
    }
    for (idx, d) in points.iter().enumerate() {
        let c = cfg.with_destination(*d);
        let stats = link_stats(&c)?;
        columns[0].2.push(no_ris(&stats, 0.0, &rule)?.1);
        for (col, &design) in columns[1..].iter_mut().zip(designs) {
            let rate = match closed_form(design) {
                Some(md) => ergodic_rate(&gamma_approx(&stats, c.m_elements, md)?)?,
                None => {
                    let samples = snr_samples(&c, design, spec.trials()?, destination_seed(spec.seed, idx))?;
                    mc_point(&samples, 0.0)[1].0
                }
            };
            col.2.push(rate);
        }
    }
    let mut out = String::from("design,method,quantile,rate\n");
    for (name, method, mut rates) in columns {
        rates.sort_by(f64::total_cmp);
        let n = rates.len() as f64;
        for (i, r) in rates.iter().enumerate() {
            writeln!(out, "{name},{method},{},{}", Num((i + 1) as f64 / n), Num(*r))?;
        }
    }
    Ok(out)
}

fn sweep_m(
    cfg: &ScenarioConfig,
    m_list: &[usize],
    rate: f64,
    dest: &Destinations,
    designs: &[PhaseDesign],
    spec: &ExperimentSpec,
) -> Result<String> {
    let rule = QuadratureRule::gauss_legendre(riscov_core::analytic::ERGODIC_RULE_ORDER)?;
    let points = sample_destinations(dest, spec.seed);
    let n = points.len() as f64;
    let mut out = String::from("m,design,method,coverage,coverage_stderr,rate,rate_stderr\n");
    for &m in m_list {
        let base = cfg.with_elements(m, squarest_rows(m));
        let mut none = (0.0, 0.0);
        for d in &points {
            let (c, r) = no_ris(&link_stats(&base.with_destination(*d))?, rate, &rule)?;
            none = (none.0 + c, none.1 + r);
        }
        writeln!(out, "{m},no_ris,exact,{},,{},", Num(none.0 / n), Num(none.1 / n))?;
        for &design in designs {
            // Sums of values and of squared standard errors.
            let mut acc = [0.0f64; 4];
            for (idx, d) in points.iter().enumerate() {
                let c = base.with_destination(*d);
                let stats = link_stats(&c)?;
                match closed_form(design) {
                    Some(md) => {
                        let a = gamma_approx(&stats, m, md).with_context(|| format!("M = {m}, {design}"))?;
                        acc[0] += coverage_probability(&a, rate)?;
                        acc[2] += ergodic_rate(&a)?;
                    }
                    None => {
                        let samples = snr_samples(&c, design, spec.trials()?, destination_seed(spec.seed, idx))?;
                        let [(cv, cs), (rv, rs)] = mc_point(&samples, rate);
                        acc[0] += cv;
                        acc[1] += cs * cs;
                        acc[2] += rv;
                        acc[3] += rs * rs;
                    }
                }
            }
            if closed_form(design).is_some() {
                writeln!(out, "{m},{design},closed_form,{},,{},", Num(acc[0] / n), Num(acc[2] / n))?;
            } else {
                writeln!(
                    out,
                    "{m},{design},mc,{},{},{},{}",
                    Num(acc[0] / n),
                    Num(acc[1].sqrt() / n),
                    Num(acc[2] / n),
                    Num(acc[3].sqrt() / n)
                )?;
            }
        }
    }
    Ok(out)
}

fn validate_moments(cfg: &ScenarioConfig, m_list: &[usize], profiles: &[PhaseDesign], spec: &ExperimentSpec) -> Result<String> {
    let trials = spec.trials()?;
    let mut out = String::from("m,profile,moment,closed_form,mc,mc_stderr,z\n");
    for &m in m_list {
        let c = cfg.with_elements(m, squarest_rows(m));
        let stats = link_stats(&c)?;
        let (sr, rd) = c.los_vectors(&stats)?;
        for &design in profiles {
            let profile = match design {
                PhaseDesign::Equal => equal_profile(m),
                PhaseDesign::LongTerm => long_term_profile(&sr, &rd)?,
                PhaseDesign::Random => random_profile(m, &mut RandomStream::new(spec.seed)),
                PhaseDesign::ShortTerm => unreachable!("rejected by validation"),
            };
            let exact = cascaded_moments(&stats, m, alpha_bar_sq(&sr, &profile.thetas, &rd));
            let (second, fourth) = estimate_cascaded_moments(&c, &profile, trials, spec.seed)?;
            for (name, cf, e) in [("second", exact.second, second), ("fourth", exact.fourth, fourth)] {
                let z = (e.value - cf) / e.std_error;
                writeln!(out, "{m},{design},{name},{},{},{},{}", Num(cf), Num(e.value), Num(e.std_error), Num(z))?;
            }
        }
    }
    Ok(out)
}
