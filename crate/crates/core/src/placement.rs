//! RIS placement: gradient of the closed-form coverage with respect to the RIS
//! coordinates, and projected gradient ascent over a box.
//!
//! The Rician factors are held fixed while differentiating; they only change
//! between iterations, when the RIS has moved.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    gamma_approx, long_term_o, short_term_normalized, snr_threshold, GammaApprox, MatchedDesign,
};
use crate::channel::{link_stats, LinkStats, Position3, ScenarioConfig};
use crate::error::{Error, Result};
use crate::specfun::{gamma_density, gamma_p, gamma_q};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementBox {
    pub min: Position3,
    pub max: Position3,
}

impl PlacementBox {
    pub fn new(min: Position3, max: Position3) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config("box corners must be finite".into()));
        }
        if self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z {
            return Err(Error::Config("box minimum exceeds maximum".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, p: Position3) -> Position3 {
        Position3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    #[serde(rename = "box")]
    pub bounds: PlacementBox,
    pub initial: Position3,
    pub step_size: f64,
    /// Stop once the squared move between iterates is at most this (m²).
    pub epsilon: f64,
    pub max_iters: usize,
    pub design: MatchedDesign,
    pub target_rate: f64,
    /// Halve the step until coverage does not decrease.
    #[serde(default)]
    pub backtracking: bool,
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !self.bounds.contains(&self.initial) {
            return Err(Error::Config("initial RIS position lies outside the box".into()));
        }
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!("step size {} must be non-negative", self.step_size)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.target_rate > 0.0) || !self.target_rate.is_finite() {
            return Err(Error::Config(format!("target rate {} must be positive", self.target_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Iterate {
    pub position: Position3,
    pub coverage: f64,
    pub gradient: [f64; 3],
}

impl Iterate {
    pub fn grad_norm(&self) -> f64 {
        norm(&self.gradient)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementTrace {
    /// Every visited position, starting with the initial one.
    pub iterates: Vec<Iterate>,
    pub stop_reason: Option<StopReason>,
    pub final_position: Position3,
    /// Number of position updates performed.
    pub iterations: usize,
}

impl PlacementTrace {
    pub fn initial_coverage(&self) -> Option<f64> {
        self.iterates.first().map(|i| i.coverage)
    }

    pub fn final_coverage(&self) -> Option<f64> {
        self.iterates.last().map(|i| i.coverage)
    }

    /// CSV with header `iter,x,y,z,coverage,grad_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,x,y,z,coverage,grad_norm")?;
        for (i, it) in self.iterates.iter().enumerate() {
            let p = it.position;
            writeln!(out, "{i},{},{},{},{},{}", p.x, p.y, p.z, it.coverage, it.grad_norm())?;
        }
        Ok(())
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Statistics at `pos` with the Rician factors replaced by `kappas`.
fn frozen_stats(cfg: &ScenarioConfig, pos: Position3, kappas: (f64, f64)) -> Result<LinkStats> {
    let s = link_stats(&cfg.with_ris(pos))?;
    Ok(s.with_kappas(kappas.0, kappas.1))
}

fn approx_at(cfg: &ScenarioConfig, stats: &LinkStats, design: MatchedDesign) -> Result<GammaApprox> {
    gamma_approx(stats, cfg.m_elements, design)
}

/// Closed-form coverage with the RIS at `pos` (Rician factors from `pos`).
pub fn coverage_at(cfg: &ScenarioConfig, pos: Position3, design: MatchedDesign, target_rate: f64) -> Result<f64> {
    let stats = link_stats(&cfg.with_ris(pos))?;
    coverage_from_stats(cfg, &stats, design, target_rate)
}

fn coverage_from_stats(cfg: &ScenarioConfig, stats: &LinkStats, design: MatchedDesign, target_rate: f64) -> Result<f64> {
    let g = approx_at(cfg, stats, design)?;
    crate::analytic::coverage_probability(&g, target_rate)
}

/// `∂β/∂ϱ` for `β = K₀ d^(−η)` along each RIS coordinate.
fn gain_gradient(beta: f64, exponent: f64, ris: &Position3, node: &Position3) -> [f64; 3] {
    let d2 = ris.distance(node).powi(2);
    let f = -exponent * beta / d2;
    [f * (ris.x - node.x), f * (ris.y - node.y), f * (ris.z - node.z)]
}

/// Shape and scale of the matched law and their derivatives with respect to
/// `t = β_sr β_rd`, everything else fixed.
fn shape_scale_dt(stats: &LinkStats, m: usize, design: MatchedDesign) -> Result<(f64, f64, f64, f64)> {
    let t = stats.beta_sr * stats.beta_rd;
    let nu = stats.nu;
    let bsd = stats.beta_sd;
    match design {
        MatchedDesign::ShortTerm => {
            use std::f64::consts::PI;
            let (c2n, c4n, _, _) = short_term_normalized(stats.kappa_sr, stats.kappa_rd, m)?;
            let c1 = 0.5 * (PI * bsd).sqrt();
            let c3 = (4.0 - PI) / 4.0 * bsd;
            let a = c1 + c2n * t.sqrt();
            let b = c3 + c4n * t;
            if !(b > 0.0) {
                return Err(Error::MatchingFailure {
                    c3,
                    c4: c4n * t,
                    sum: b,
                    kappa_sr: stats.kappa_sr,
                    kappa_rd: stats.kappa_rd,
                });
            }
            let da = c2n / (2.0 * t.sqrt());
            let db = c4n;
            let k_c = a * a / b;
            let w_c = b / a;
            let dk_c = (2.0 * a * da * b - a * a * db) / (b * b);
            let dw_c = (db * a - b * da) / (a * a);
            let l1 = w_c * w_c * k_c * (1.0 + k_c);
            let l2 = w_c.powi(4) * k_c * (k_c + 1.0) * (2.0 * k_c + 3.0);
            let dl1 = 2.0 * w_c * dw_c * k_c * (1.0 + k_c) + w_c * w_c * (1.0 + 2.0 * k_c) * dk_c;
            let dl2 = 4.0 * w_c.powi(3) * dw_c * k_c * (k_c + 1.0) * (2.0 * k_c + 3.0)
                + w_c.powi(4)
                    * dk_c
                    * ((k_c + 1.0) * (2.0 * k_c + 3.0) + k_c * (2.0 * k_c + 3.0) + 2.0 * k_c * (k_c + 1.0));
            let k = l1 * l1 / (2.0 * l2);
            let w = 2.0 * nu * l2 / l1;
            let dk = l1 * dl1 / l2 - l1 * l1 * dl2 / (2.0 * l2 * l2);
            let dw = 2.0 * nu * (dl2 * l1 - l2 * dl1) / (l1 * l1);
            Ok((k, w, dk, dw))
        }
        MatchedDesign::LongTerm => {
            if stats.kappa_sr * stats.kappa_rd == 0.0 && m > 0 {
                return Err(Error::DegenerateLos { index: 0 });
            }
            let kk = (stats.kappa_sr + 1.0) * (stats.kappa_rd + 1.0);
            let (n1, n2) = long_term_o(stats, m);
            let o1 = n1 / kk;
            let o2 = n2 / (kk * kk);
            let num = nu * bsd + nu * o1 * t;
            let den = nu * nu * (bsd * bsd + o2 * t * t + 2.0 * bsd * o1 * t);
            let dnum = nu * o1;
            let dden = nu * nu * (2.0 * o2 * t + 2.0 * bsd * o1);
            let k = num * num / den;
            let w = den / num;
            let dk = (2.0 * num * dnum * den - num * num * dden) / (den * den);
            let dw = (dden * num - den * dnum) / (num * num);
            Ok((k, w, dk, dw))
        }
    }
}

/// `∂Q(k, u)/∂k` by central difference in `k`. Near saturation the smaller
/// of `P` and `Q` is differenced so the step stays above rounding.
fn dq_dk(k: f64, u: f64, q: f64) -> Result<f64> {
    let h = 1e-6 * k.max(1.0);
    if q <= 0.5 {
        Ok((gamma_q(k + h, u)? - gamma_q(k - h, u)?) / (2.0 * h))
    } else {
        Ok(-(gamma_p(k + h, u)? - gamma_p(k - h, u)?) / (2.0 * h))
    }
}

/// Analytic gradient of the closed-form coverage with respect to the RIS
/// coordinates, Rician factors frozen at their values at `pos`.
pub fn coverage_gradient(
    cfg: &ScenarioConfig,
    pos: Position3,
    design: MatchedDesign,
    target_rate: f64,
) -> Result<[f64; 3]> {
    let stats = link_stats(&cfg.with_ris(pos))?;
    Ok(gradient_with_stats(cfg, pos, &stats, design, target_rate)?.1)
}

/// Coverage and its gradient at `pos` for the given statistics.
fn gradient_with_stats(
    cfg: &ScenarioConfig,
    pos: Position3,
    stats: &LinkStats,
    design: MatchedDesign,
    target_rate: f64,
) -> Result<(f64, [f64; 3])> {
    let (k, w, dk_dt, dw_dt) = shape_scale_dt(stats, cfg.m_elements, design)?;
    let tau = snr_threshold(target_rate);
    let u = tau / w;
    let q = gamma_q(k, u)?;
    // dP/dt = −f(k,u)·du/dt + ∂Q/∂k·dk/dt, with du/dt = −τ w⁻² dw/dt.
    let du_dt = -tau / (w * w) * dw_dt;
    let dp_dt = -gamma_density(k, u) * du_dt + dq_dk(k, u, q)? * dk_dt;

    let d_sr = gain_gradient(stats.beta_sr, cfg.indirect_law_sr.exponent, &pos, &cfg.source);
    let d_rd = gain_gradient(stats.beta_rd, cfg.indirect_law_rd.exponent, &pos, &cfg.destination);
    let mut g = [0.0; 3];
    for i in 0..3 {
        let dt = d_sr[i] * stats.beta_rd + stats.beta_sr * d_rd[i];
        g[i] = dp_dt * dt;
    }
    Ok((q, g))
}

/// Central differences of the closed-form coverage with step `h`, Rician
/// factors frozen at their values at `pos`.
pub fn gradient_finite_difference(
    cfg: &ScenarioConfig,
    pos: Position3,
    design: MatchedDesign,
    target_rate: f64,
    h: f64,
) -> Result<[f64; 3]> {
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::domain("gradient_finite_difference", format!("h = {h} outside [1e-6, 1e-2]")));
    }
    let s = link_stats(&cfg.with_ris(pos))?;
    let kappas = (s.kappa_sr, s.kappa_rd);
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut a = pos.to_array();
        let mut b = pos.to_array();
        a[i] += h;
        b[i] -= h;
        let pa = coverage_from_stats(cfg, &frozen_stats(cfg, Position3::from_array(a), kappas)?, design, target_rate)?;
        let pb = coverage_from_stats(cfg, &frozen_stats(cfg, Position3::from_array(b), kappas)?, design, target_rate)?;
        *gi = (pa - pb) / (2.0 * h);
    }
    Ok(g)
}

/// Projected gradient ascent on the closed-form coverage.
///
/// Each iteration moves the RIS by `step_size · ∇P`, clamps it to the box and
/// recomputes the Rician factors at the new position. The loop stops once the
/// squared move is at most `epsilon` or after `max_iters` moves.
pub fn optimize_placement(cfg: &ScenarioConfig, pcfg: &PlacementConfig) -> Result<PlacementTrace> {
    pcfg.validate()?;
    let design = pcfg.design;
    let rate = pcfg.target_rate;
    let eval = |pos: Position3| -> Result<(f64, [f64; 3])> {
        let stats = link_stats(&cfg.with_ris(pos))?;
        gradient_with_stats(cfg, pos, &stats, design, rate)
    };

    let mut trace = PlacementTrace {
        iterates: Vec::new(),
        stop_reason: None,
        final_position: pcfg.initial,
        iterations: 0,
    };
    let mut pos = pcfg.initial;
    let (mut cov, mut grad) = eval(pos)?;
    loop {
        if !grad.iter().all(|g| g.is_finite()) {
            let iteration = trace.iterations;
            trace.final_position = pos;
            return Err(Error::NonFiniteGradient {
                iteration,
                trace: Box::new(trace),
            });
        }
        trace.iterates.push(Iterate {
            position: pos,
            coverage: cov,
            gradient: grad,
        });
        if trace.iterations == pcfg.max_iters {
            trace.stop_reason = Some(StopReason::MaxIters);
            break;
        }

        let mut step = pcfg.step_size;
        let (next, next_cov, next_grad) = loop {
            let p = &pos;
            let next = pcfg.bounds.clamp(Position3::new(
                p.x + step * grad[0],
                p.y + step * grad[1],
                p.z + step * grad[2],
            ));
            let (c, g) = eval(next)?;
            if !pcfg.backtracking || c >= cov || step < 1e-12 {
                break (next, c, g);
            }
            step *= 0.5;
        };
        trace.iterations += 1;
        let moved = {
            let (dx, dy, dz) = (next.x - pos.x, next.y - pos.y, next.z - pos.z);
            dx * dx + dy * dy + dz * dz
        };
        pos = next;
        cov = next_cov;
        grad = next_grad;
        if moved <= pcfg.epsilon {
            trace.iterates.push(Iterate {
                position: pos,
                coverage: cov,
                gradient: grad,
            });
            trace.stop_reason = Some(StopReason::Converged);
            break;
        }
    }
    trace.final_position = pos;
    Ok(trace)
}

/// Evaluation grid over a box: `resolution[i]` nodes along axis `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    #[serde(rename = "box")]
    pub bounds: PlacementBox,
    pub resolution: [usize; 3],
}

impl LandscapeGrid {
    /// Grid with nodes every `spacing` meters (the box extent is assumed to
    /// be a multiple of it).
    pub fn with_spacing(bounds: PlacementBox, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Config(format!("grid spacing {spacing} must be positive")));
        }
        let n = |lo: f64, hi: f64| ((hi - lo) / spacing).round() as usize + 1;
        Ok(Self {
            bounds,
            resolution: [
                n(bounds.min.x, bounds.max.x),
                n(bounds.min.y, bounds.max.y),
                n(bounds.min.z, bounds.max.z),
            ],
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let lo = self.bounds.min.to_array();
        let hi = self.bounds.max.to_array();
        for i in 0..3 {
            match self.resolution[i] {
                0 => return Err(Error::Config("grid resolution must be positive".into())),
                1 if lo[i] != hi[i] => {
                    return Err(Error::Config(format!(
                        "axis {i} spans [{}, {}] but has a single node",
                        lo[i], hi[i]
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in x-major, then y, then z order.
    pub fn nodes(&self) -> Vec<Position3> {
        let lo = self.bounds.min.to_array();
        let hi = self.bounds.max.to_array();
        let axis = |i: usize| -> Vec<f64> {
            let n = self.resolution[i];
            if n == 1 {
                return vec![lo[i]];
            }
            (0..n)
                .map(|j| {
                    if j == n - 1 {
                        hi[i]
                    } else {
                        lo[i] + (hi[i] - lo[i]) * j as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(self.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Position3::new(x, y, z));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapeNode {
    pub position: Position3,
    pub coverage: f64,
}

/// Closed-form coverage with the RIS at every grid node.
pub fn coverage_landscape(
    cfg: &ScenarioConfig,
    design: MatchedDesign,
    target_rate: f64,
    grid: &LandscapeGrid,
) -> Result<Vec<LandscapeNode>> {
    grid.validate()?;
    grid.nodes()
        .into_par_iter()
        .map(|position| {
            Ok(LandscapeNode {
                position,
                coverage: coverage_at(cfg, position, design, target_rate)?,
            })
        })
        .collect()
}

/// Closed-form coverage at every grid node averaged over `destinations`.
pub fn mean_coverage_landscape(
    cfg: &ScenarioConfig,
    destinations: &[Position3],
    design: MatchedDesign,
    target_rate: f64,
    grid: &LandscapeGrid,
) -> Result<Vec<LandscapeNode>> {
    grid.validate()?;
    if destinations.is_empty() {
        return Err(Error::Config("no destinations to average over".into()));
    }
    let cfgs: Vec<ScenarioConfig> = destinations.iter().map(|d| cfg.with_destination(*d)).collect();
    grid.nodes()
        .into_par_iter()
        .map(|position| {
            let mut sum = 0.0;
            for c in &cfgs {
                sum += coverage_at(c, position, design, target_rate)?;
            }
            Ok(LandscapeNode {
                position,
                coverage: sum / cfgs.len() as f64,
            })
        })
        .collect()
}

/// CSV with header `x,y,z,coverage`.
pub fn write_landscape_csv<W: Write>(mut out: W, nodes: &[LandscapeNode]) -> Result<()> {
    writeln!(out, "x,y,z,coverage")?;
    for n in nodes {
        let p = n.position;
        writeln!(out, "{},{},{},{}", p.x, p.y, p.z, n.coverage)?;
    }
    Ok(())
}
