use thiserror::Error;

use crate::placement::PlacementTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a numerical function.
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    /// A series or continued fraction hit its iteration cap.
    #[error("{func}: no convergence after {iterations} iterations (partial = {partial:e}, last term bound = {bound:e})")]
    NonConvergence {
        func: &'static str,
        iterations: usize,
        partial: f64,
        bound: f64,
    },

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Long-term phases need a non-vanishing LoS component on both hops.
    #[error("long-term phase profile undefined: LoS entry {index} has zero magnitude")]
    DegenerateLos { index: usize },

    #[error("short-term Gamma matching failed: c3 + c4 = {sum:e} <= 0 (c3 = {c3:e}, c4 = {c4:e}, kappa_sr = {kappa_sr}, kappa_rd = {kappa_rd})")]
    MatchingFailure {
        c3: f64,
        c4: f64,
        sum: f64,
        kappa_sr: f64,
        kappa_rd: f64,
    },

    #[error("{}", parse_message(.line, .key, .message))]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("placement aborted at iteration {iteration}: non-finite gradient")]
    NonFiniteGradient {
        iteration: usize,
        trace: Box<PlacementTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_message(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("line {l}, key `{k}`: {message}"),
        (Some(l), None) => format!("line {l}: {message}"),
        (None, Some(k)) => format!("key `{k}`: {message}"),
        (None, None) => message.to_string(),
    }
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}
