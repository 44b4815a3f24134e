use crate::error::{Error, Result};

const MAX_TERMS: usize = 20_000;

/// Beyond this magnitude of a negative argument the asymptotic expansion is
/// used instead of the Kummer-transformed series, whose sum would overflow.
const ASYMPTOTIC_THRESHOLD: f64 = 600.0;

/// Confluent hypergeometric function of the first kind, `₁F₁(a; b; x)`.
///
/// Negative arguments go through Kummer's transformation
/// `₁F₁(a; b; x) = eˣ ₁F₁(b − a; b; −x)`, which turns the alternating series
/// into one with same-signed terms whenever `b − a` and `b` are positive.
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::domain("hyp1f1", format!("non-finite argument ({a}, {b}, {x})")));
    }
    if b <= 0.0 && b == b.floor() {
        return Err(Error::domain("hyp1f1", format!("b = {b} is a non-positive integer")));
    }
    if x == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    if a == b {
        return Ok(x.exp());
    }
    if x < 0.0 {
        if -x > ASYMPTOTIC_THRESHOLD {
            if let Some(v) = negative_asymptotic(a, b, x) {
                return Ok(v);
            }
        }
        return Ok(x.exp() * series(b - a, b, -x)?);
    }
    series(a, b, x)
}

fn series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * x / ((b + nf) * (nf + 1.0));
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Stop only once the terms are shrinking geometrically.
        if ratio.abs() < 1.0 && term.abs() <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        func: "hyp1f1",
        iterations: MAX_TERMS,
        partial: sum,
        bound: term.abs(),
    })
}

/// `Γ(b)/Γ(b−a) (−x)^{−a} Σ (a)ₙ (a−b+1)ₙ / n! (−x)^{−n}` for `x → −∞`.
fn negative_asymptotic(a: f64, b: f64, x: f64) -> Option<f64> {
    if (b - a) <= 0.0 && (b - a) == (b - a).floor() {
        return None;
    }
    if b <= 0.0 {
        return None;
    }
    let z = -x;
    let ln_pref = super::gamma::ln_gamma_unchecked(b) - super::gamma::ln_gamma_unchecked(b - a);
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for n in 0..60 {
        let nf = n as f64;
        let next = term * (a + nf) * (a - b + 1.0 + nf) / ((nf + 1.0) * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    Some((ln_pref - a * z.ln()).exp() * sum)
}
