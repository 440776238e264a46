//! Two-point means used by entropy-conservative fluxes.

use crate::error::{Error, Result};

/// Below this value of `((a - b) / (a + b))^2` the logarithmic mean is
/// evaluated by its series expansion.
pub const LOG_MEAN_SERIES_THRESHOLD: f64 = 1e-4;

fn positive(a: f64, b: f64, what: &str) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} mean needs positive arguments, got {a:e} and {b:e}")))
    }
}

/// `(b - a) / (ln b - ln a)`, with `(a, a) -> a`.
pub fn mean_log(a: f64, b: f64) -> Result<f64> {
    positive(a, b, "logarithmic")?;
    let z = (a - b) / (a + b);
    let zeta = z * z;
    if zeta < LOG_MEAN_SERIES_THRESHOLD {
        // ln(b/a) = 2 atanh(z') with z' = (b - a)/(a + b)
        let f = 1.0 + zeta / 3.0 + zeta * zeta / 5.0 + zeta * zeta * zeta / 7.0;
        Ok(0.5 * (a + b) / f)
    } else {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d = hi - lo;
        Ok(d / (d / lo).ln_1p())
    }
}

pub fn mean_geo(a: f64, b: f64) -> Result<f64> {
    positive(a, b, "geometric")?;
    Ok((a * b).sqrt())
}

pub fn mean_harm(a: f64, b: f64) -> Result<f64> {
    positive(a, b, "harmonic")?;
    Ok(2.0 * a * b / (a + b))
}

pub fn mean_arith(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}
