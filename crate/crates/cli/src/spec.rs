//! Experiment spec files.
//!
//! A spec is a flat key–value document (the scenario format) naming the
//! experiment `kind`, the `scenario` file (relative to the spec), the
//! parameters of that kind and an optional `output` file name.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use riscov_core::analytic::MatchedDesign;
use riscov_core::channel::{Position3, ScenarioConfig};
use riscov_core::montecarlo::{MIN_MOMENT_TRIALS, MIN_TRIALS};
use riscov_core::phase::PhaseDesign;
use riscov_core::placement::{LandscapeGrid, PlacementBox, PlacementConfig};
use riscov_core::scenario::{load_scenario, DestinationBox, Document};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    CoverageVsRate,
    RateCdf,
    SweepM,
    PlacementRun,
    Landscape,
    ValidateMoments,
}

impl FromStr for Kind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "coverage_vs_rate" => Kind::CoverageVsRate,
            "rate_cdf" => Kind::RateCdf,
            "sweep_m" => Kind::SweepM,
            "placement_run" => Kind::PlacementRun,
            "landscape" => Kind::Landscape,
            "validate_moments" => Kind::ValidateMoments,
            other => bail!(
                "unknown experiment kind `{other}` (expected coverage_vs_rate, rate_cdf, sweep_m, \
                 placement_run, landscape or validate_moments)"
            ),
        })
    }
}

/// Destinations averaged over: a stratified sample of `per_axis²` points.
#[derive(Debug, Clone, Copy)]
pub struct Destinations {
    pub region: DestinationBox,
    pub per_axis: usize,
}

#[derive(Debug, Clone)]
pub enum Params {
    CoverageVsRate {
        rates: Vec<f64>,
        designs: Vec<PhaseDesign>,
    },
    RateCdf {
        destinations: Destinations,
        designs: Vec<PhaseDesign>,
    },
    SweepM {
        m_list: Vec<usize>,
        rate: f64,
        destinations: Destinations,
        designs: Vec<PhaseDesign>,
    },
    PlacementRun(PlacementConfig),
    Landscape {
        grid: LandscapeGrid,
        design: MatchedDesign,
        rate: f64,
        destinations: Option<Destinations>,
    },
    ValidateMoments {
        m_list: Vec<usize>,
        profiles: Vec<PhaseDesign>,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub params: Params,
    pub trials: Option<usize>,
    pub seed: u64,
    pub output: String,
}

const DEFAULT_SEED: u64 = 2022;

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let doc = Document::read(path).with_context(|| format!("reading {}", path.display()))?;
        let spec = Self::from_document(&doc, path).with_context(|| format!("in {}", path.display()))?;
        doc.deny_unused().with_context(|| format!("in {}", path.display()))?;
        Ok(spec)
    }

    fn from_document(doc: &Document, path: &Path) -> Result<Self> {
        let kind: Kind = doc.string("kind")?.parse()?;
        let rel = doc.string("scenario")?;
        let scenario_path = path.parent().unwrap_or(Path::new(".")).join(rel);
        let scenario =
            load_scenario(&scenario_path).with_context(|| format!("scenario {}", scenario_path.display()))?;
        let trials = if doc.contains("trials") { Some(doc.usize("trials")?) } else { None };
        let seed = if doc.contains("seed") { doc.u64("seed")? } else { DEFAULT_SEED };
        let output = if doc.contains("output") {
            doc.string("output")?
        } else {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
            format!("{stem}.csv")
        };
        let params = match kind {
            Kind::CoverageVsRate => Params::CoverageVsRate {
                rates: doc.f64_list("rates")?,
                designs: designs(doc, "designs")?,
            },
            Kind::RateCdf => Params::RateCdf {
                destinations: destinations(doc)?,
                designs: designs(doc, "designs")?,
            },
            Kind::SweepM => Params::SweepM {
                m_list: doc.usize_list("m_list")?,
                rate: doc.f64("rate")?,
                destinations: destinations(doc)?,
                designs: designs(doc, "designs")?,
            },
            Kind::PlacementRun => Params::PlacementRun(PlacementConfig {
                bounds: placement_box(doc, "box")?,
                initial: doc.position("initial")?,
                step_size: doc.f64("step_size")?,
                epsilon: doc.f64("epsilon")?,
                max_iters: doc.usize("max_iters")?,
                design: matched(doc)?,
                target_rate: doc.f64("rate")?,
                backtracking: if doc.contains("backtracking") { doc.bool("backtracking")? } else { false },
            }),
            Kind::Landscape => {
                let bounds = placement_box(doc, "box")?;
                let grid = if doc.contains("resolution") {
                    let r = doc.usize_list("resolution")?;
                    ensure!(r.len() == 3, "`resolution` needs three entries, found {}", r.len());
                    LandscapeGrid {
                        bounds,
                        resolution: [r[0], r[1], r[2]],
                    }
                } else {
                    LandscapeGrid::with_spacing(bounds, doc.f64("spacing")?)?
                };
                Params::Landscape {
                    grid,
                    design: matched(doc)?,
                    rate: doc.f64("rate")?,
                    destinations: if doc.contains("destination_box") { Some(destinations(doc)?) } else { None },
                }
            }
            Kind::ValidateMoments => Params::ValidateMoments {
                m_list: doc.usize_list("m_list")?,
                profiles: designs(doc, "profiles")?,
            },
        };
        Ok(Self {
            scenario,
            params,
            trials,
            seed,
            output,
        })
    }

    /// Monte Carlo trial count; only the sampling kinds need one.
    pub fn trials(&self) -> Result<usize> {
        self.trials
            .with_context(|| "`trials` is required for this experiment kind".to_string())
    }

    /// Checks everything that can be checked before any work is done.
    pub fn validate(&self) -> Result<()> {
        let needs_mc = |designs: &[PhaseDesign]| {
            designs.iter().any(|d| matches!(d, PhaseDesign::Equal | PhaseDesign::Random))
        };
        match &self.params {
            Params::CoverageVsRate { rates, designs } => {
                ensure!(!rates.is_empty(), "`rates` is empty");
                ensure!(!designs.is_empty(), "`designs` is empty");
                for &r in rates {
                    ensure!(r.is_finite() && r >= 0.0, "target rate {r} must be finite and non-negative");
                }
                self.check_trials(MIN_TRIALS)?;
            }
            Params::RateCdf { destinations, designs } => {
                ensure!(!designs.is_empty(), "`designs` is empty");
                check_destinations(destinations)?;
                if needs_mc(designs) {
                    self.check_trials(MIN_TRIALS)?;
                }
            }
            Params::SweepM {
                m_list,
                rate,
                destinations,
                designs,
            } => {
                ensure!(!m_list.is_empty(), "`m_list` is empty");
                ensure!(!designs.is_empty(), "`designs` is empty");
                ensure!(m_list.iter().all(|&m| m > 0), "`m_list` entries must be positive");
                ensure!(rate.is_finite() && *rate > 0.0, "target rate {rate} must be positive");
                check_destinations(destinations)?;
                if needs_mc(designs) {
                    self.check_trials(MIN_TRIALS)?;
                }
            }
            Params::PlacementRun(p) => p.validate()?,
            Params::Landscape {
                grid,
                rate,
                destinations,
                ..
            } => {
                grid.validate()?;
                ensure!(rate.is_finite() && *rate > 0.0, "target rate {rate} must be positive");
                if let Some(d) = destinations {
                    check_destinations(d)?;
                }
            }
            Params::ValidateMoments { m_list, profiles } => {
                ensure!(!m_list.is_empty(), "`m_list` is empty");
                ensure!(!profiles.is_empty(), "`profiles` is empty");
                ensure!(m_list.iter().all(|&m| m > 0), "`m_list` entries must be positive");
                if profiles.contains(&PhaseDesign::ShortTerm) {
                    bail!("the short-term design has no fixed profile; use equal, long_term or random");
                }
                self.check_trials(MIN_MOMENT_TRIALS)?;
            }
        }
        Ok(())
    }

    fn check_trials(&self, floor: usize) -> Result<()> {
        let n = self.trials()?;
        ensure!(n >= floor, "{n} trials requested, at least {floor} required");
        Ok(())
    }
}

fn designs(doc: &Document, key: &str) -> Result<Vec<PhaseDesign>> {
    if !doc.contains(key) {
        return Ok(PhaseDesign::ALL.to_vec());
    }
    doc.string_list(key)?
        .iter()
        .map(|s| s.parse().map_err(anyhow::Error::from))
        .collect()
}

fn matched(doc: &Document) -> Result<MatchedDesign> {
    let d: PhaseDesign = doc.string("design")?.parse()?;
    Ok(MatchedDesign::try_from(d)?)
}

fn placement_box(doc: &Document, key: &str) -> Result<PlacementBox> {
    Ok(PlacementBox::new(
        doc.position(&format!("{key}.min"))?,
        doc.position(&format!("{key}.max"))?,
    )?)
}

fn destinations(doc: &Document) -> Result<Destinations> {
    Ok(Destinations {
        region: DestinationBox {
            min: doc.position("destination_box.min")?,
            max: doc.position("destination_box.max")?,
        },
        per_axis: doc.usize("per_axis")?,
    })
}

fn check_destinations(d: &Destinations) -> Result<()> {
    ensure!(d.per_axis > 0, "`per_axis` must be positive");
    let (lo, hi) = (d.region.min, d.region.max);
    ensure!(
        lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z,
        "destination box min must not exceed max"
    );
    ensure!(
        [lo, hi].iter().all(Position3::is_finite),
        "destination box is not finite"
    );
    Ok(())
}
