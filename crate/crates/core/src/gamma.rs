//! The update of an MP scheme as a function of the relaxation parameter.
//!
//! For `gamma > 0` the relaxed update solves
//!
//! ```text
//! M_gamma u^{n+gamma} = u^n + gamma * g
//! M_gamma = I + gamma dt sum_j w_j (diag(loss_j) - P_j) diag(1 / sigma_bar(gamma))
//! ```
//!
//! where `g` is the scheme's update offset. With `sigma_bar = sigma` this is
//! `gamma (M - I) + I`; the dense and bootstrapped variants let the Patankar
//! weights follow `gamma` as well. At `gamma = 1` every variant reproduces the
//! base step bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{zmatrix_solve, SquareMatrix};
use crate::pdrs::{check_positive, lift_underflow};
use crate::scheme::{Derived, MpScheme};
use crate::stepper::{geometric_blend, log_ratio, patankar_excess, patankar_matrix, patankar_rhs, StepRecord};

/// How the update denominators depend on `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// `sigma_bar(gamma) = sigma`.
    #[default]
    Frozen,
    /// Geometric interpolation between `u^n` and the second stage.
    Dense,
    /// Dense for the second-order schemes; for MPRK43I the sigma system is
    /// re-solved with `gamma`-scaled weights.
    Bootstrap,
}

impl SigmaMode {
    pub fn name(self) -> &'static str {
        match self {
            SigmaMode::Frozen => "frozen",
            SigmaMode::Dense => "dense",
            SigmaMode::Bootstrap => "bootstrap",
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SigmaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen" => Ok(SigmaMode::Frozen),
            "dense" => Ok(SigmaMode::Dense),
            "bootstrap" => Ok(SigmaMode::Bootstrap),
            _ => {
                Err(Error::InvalidParameter(format!("unknown sigma mode '{s}' (expected frozen, dense or bootstrap)")))
            }
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("relaxation parameter must be positive, got {gamma}")))
    }
}

/// `sigma_bar(gamma)` and its derivative with respect to `gamma`.
pub fn sigma_bar(scheme: &MpScheme, record: &StepRecord, gamma: f64, mode: SigmaMode) -> Result<(Vec<f64>, Vec<f64>)> {
    check_gamma(gamma)?;
    let d = record.dim();
    if mode == SigmaMode::Frozen {
        return Ok((record.sigma.clone(), vec![0.0; d]));
    }
    let un = &record.u_n[..d];
    let u2 = &record.stages[1][..d];
    let blended = |rate: f64| -> (Vec<f64>, Vec<f64>) {
        let e = gamma * rate;
        un.iter()
            .zip(u2)
            .map(|(&a, &b)| {
                let s = geometric_blend(a, b, e);
                (s, s * rate * log_ratio(a, b))
            })
            .unzip()
    };
    match (scheme.derived, mode) {
        (Derived::Mprk22, _) => Ok(blended(1.0 / scheme.alpha)),
        (Derived::Mpssprk2 { s, .. }, _) => Ok(blended(s)),
        (Derived::Mprk43I { .. }, SigmaMode::Dense) => {
            Err(Error::Unsupported("MPRK43I has no closed-form dense sigma; use the bootstrap or frozen mode".into()))
        }
        (Derived::Mprk43I { beta1, beta2, .. }, _) => bootstrap_sigma(scheme, record, gamma, beta1, beta2),
    }
}

/// Solves the `gamma`-scaled sigma system of MPRK43I together with the
/// derivative of its solution.
fn bootstrap_sigma(
    scheme: &MpScheme,
    record: &StepRecord,
    gamma: f64,
    beta1: f64,
    beta2: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = record.dim();
    let un = &record.u_n[..d];
    let u2 = &record.stages[1][..d];
    let rate = 1.0 / scheme.a[1][0];
    let den: Vec<f64> = un.iter().zip(u2).map(|(&a, &b)| geometric_blend(a, b, gamma * rate)).collect();
    let terms = [(beta1, &record.stage_rates[0]), (beta2, &record.stage_rates[1])];
    let h = gamma * record.dt;
    let m = patankar_matrix(&terms, h, &den);
    let excess = patankar_excess(&terms, h, &den);
    let mut sb = zmatrix_solve(&m, &excess, &patankar_rhs(un, &terms, h))?;
    lift_underflow(&mut sb);
    check_positive(&sb, d)?;
    // den' / den = rate * ln(u2 / un)
    let v: Vec<f64> = sb.iter().zip(un.iter().zip(u2)).map(|(s, (&a, &b))| s * rate * log_ratio(a, b)).collect();
    let rhs = derivative_rhs(&m, &sb, un, &v, gamma);
    let sb_prime = zmatrix_solve(&m, &excess, &rhs)?;
    Ok((sb, sb_prime))
}

/// `(x - base) / gamma + (M - I) v`.
fn derivative_rhs(m: &SquareMatrix, x: &[f64], base: &[f64], v: &[f64], gamma: f64) -> Vec<f64> {
    let mv = m.mul_vec(v);
    (0..x.len()).map(|k| (x[k] - base[k]) / gamma + mv[k] - v[k]).collect()
}

/// The assembled relaxed-update system at one `gamma`.
#[derive(Debug, Clone)]
pub struct GammaSolve {
    pub gamma: f64,
    pub matrix: SquareMatrix,
    /// Column sums of `matrix`.
    pub excess: Vec<f64>,
    pub sigma_bar: Vec<f64>,
    pub sigma_bar_prime: Vec<f64>,
    /// Full state `u^{n+gamma}`.
    pub u: Vec<f64>,
}

impl GammaSolve {
    /// Solves the relaxed update at `gamma`.
    pub fn new(scheme: &MpScheme, record: &StepRecord, gamma: f64, mode: SigmaMode) -> Result<Self> {
        let (sigma_bar, sigma_bar_prime) = sigma_bar(scheme, record, gamma, mode)?;
        let d = record.dim();
        let terms = record.update_terms();
        let h = gamma * record.dt;
        let matrix = patankar_matrix(&terms, h, &sigma_bar);
        let excess = patankar_excess(&terms, h, &sigma_bar);
        let un = &record.u_n[..d];
        let (rhs, mut explicit) = match scheme.derived {
            Derived::Mpssprk2 { .. } => {
                let w = gamma * scheme.alpha;
                let blend = |a: &[f64], b: &[f64]| -> Vec<f64> {
                    a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
                };
                (blend(un, &record.stages[1][..d]), blend(&record.u_n[d..], &record.stages[1][d..]))
            }
            _ => (patankar_rhs(un, &terms, h), record.u_n[d..].to_vec()),
        };
        let mut u = zmatrix_solve(&matrix, &excess, &rhs)?;
        lift_underflow(&mut u[..d]);
        if let Err(Error::NonPositive { index, value }) = check_positive(&u, d) {
            return Err(Error::Domain(format!(
                "relaxed update at gamma = {gamma} has non-positive component {index} ({value:e})"
            )));
        }
        for &(w, r) in &terms {
            for (e, g) in explicit.iter_mut().zip(&r.explicit) {
                *e += h * w * g;
            }
        }
        u.extend(explicit);
        Ok(Self { gamma, matrix, excess, sigma_bar, sigma_bar_prime, u })
    }

    /// `d u^{n+gamma} / d gamma` for the full state.
    pub fn derivative(&self, record: &StepRecord) -> Result<Vec<f64>> {
        let d = record.dim();
        let g = self.gamma;
        let v: Vec<f64> = (0..d).map(|k| self.u[k] * self.sigma_bar_prime[k] / self.sigma_bar[k]).collect();
        let rhs = derivative_rhs(&self.matrix, &self.u[..d], &record.u_n[..d], &v, g);
        let mut du = zmatrix_solve(&self.matrix, &self.excess, &rhs)?;
        du.extend(self.u[d..].iter().zip(&record.u_n[d..]).map(|(a, b)| (a - b) / g));
        Ok(du)
    }
}

/// `u^{n+gamma}` for the full state.
pub fn gamma_update(scheme: &MpScheme, record: &StepRecord, gamma: f64, mode: SigmaMode) -> Result<Vec<f64>> {
    Ok(GammaSolve::new(scheme, record, gamma, mode)?.u)
}

/// `d u^{n+gamma} / d gamma`, given `u_gamma` from [`gamma_update`] at the
/// same `gamma`.
pub fn gamma_update_derivative(
    scheme: &MpScheme,
    record: &StepRecord,
    gamma: f64,
    mode: SigmaMode,
    u_gamma: &[f64],
) -> Result<Vec<f64>> {
    let mut solve = GammaSolve::new(scheme, record, gamma, mode)?;
    if u_gamma.len() != solve.u.len() {
        return Err(Error::Dimension { expected: solve.u.len(), found: u_gamma.len() });
    }
    solve.u = u_gamma.to_vec();
    solve.derivative(record)
}
