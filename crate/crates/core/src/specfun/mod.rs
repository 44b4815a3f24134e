//! Special functions used by the closed-form expressions.

mod gamma;
mod hyper;
mod quadrature;

pub use gamma::{digamma, gamma_p, gamma_q, gamma_upper, ln_gamma};
pub(crate) use gamma::{gamma_density, ln_gamma_unchecked};
pub use hyper::hyp1f1;
pub use quadrature::{log_expectation_gamma, QuadratureRule, MIN_LOG_EXPECTATION_ORDER};
