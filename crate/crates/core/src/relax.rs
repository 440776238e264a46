//! Relaxation of a completed MP step so that a nonlinear functional is
//! conserved or dissipated at the correct rate.

use std::fmt;
use std::str::FromStr;

use crate::entropy::{EntropyFunctional, Regime};
use crate::error::{Error, Result};
use crate::gamma::{GammaSolve, SigmaMode};
use crate::roots::{solve_scalar, RootSettings, Solver};
use crate::scheme::MpScheme;
use crate::stepper::{geometric_blend, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelaxMode {
    /// Plain MP steps.
    #[default]
    None,
    /// Affine relaxation with `gamma <= 1`, for dissipated functionals.
    ClampedDissipative,
    /// Componentwise geometric mean `u_new^gamma u_old^(1 - gamma)`.
    Geometric,
    /// Linearly implicit relaxed update, preserving linear invariants.
    Implicit,
}

impl RelaxMode {
    pub const ALL: [RelaxMode; 4] =
        [RelaxMode::None, RelaxMode::ClampedDissipative, RelaxMode::Geometric, RelaxMode::Implicit];

    pub fn name(self) -> &'static str {
        match self {
            RelaxMode::None => "none",
            RelaxMode::ClampedDissipative => "clamped",
            RelaxMode::Geometric => "geometric",
            RelaxMode::Implicit => "implicit",
        }
    }
}

impl fmt::Display for RelaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelaxMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown relaxation mode '{s}' (expected none, clamped, geometric or implicit)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxConfig {
    pub mode: RelaxMode,
    pub solver: Solver,
    /// Residual tolerance, relative to `max(1, |eta_old|)`.
    pub gamma_tol: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub max_iters: usize,
    pub sigma_mode: SigmaMode,
    /// Permit the geometric mode for functionals not known to be monotone.
    pub allow_non_monotone: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            mode: RelaxMode::None,
            solver: Solver::Newton,
            gamma_tol: 1e-10,
            gamma_min: 1e-6,
            gamma_max: 10.0,
            max_iters: 50,
            sigma_mode: SigmaMode::Frozen,
            allow_non_monotone: false,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0 && self.gamma_min < 1.0 && self.gamma_max > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < gamma_min < 1 < gamma_max, got {} and {}",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.gamma_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParameter("tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxStatus {
    /// No relaxation requested.
    Skipped,
    Converged,
    ClampedToOne,
    Failed,
}

impl RelaxStatus {
    pub fn name(self) -> &'static str {
        match self {
            RelaxStatus::Skipped => "none",
            RelaxStatus::Converged => "converged",
            RelaxStatus::ClampedToOne => "clamped_to_one",
            RelaxStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for RelaxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOutcome {
    pub gamma: f64,
    pub u_relaxed: Vec<f64>,
    pub t_relaxed: f64,
    pub eta_after: f64,
    pub iterations: usize,
    pub status: RelaxStatus,
    /// Residual at the returned `gamma` (NaN when not evaluated).
    pub residual: f64,
}

/// Target value of the functional after the step.
///
/// Conserved functionals keep `eta(u^n)`; dissipated ones use the quadrature
/// `eta(u^n) + dt sum_j b_j eta'(u^(j)) . f(u^(j))` over the stage values.
pub fn entropy_estimate(eta: &EntropyFunctional, scheme: &MpScheme, record: &StepRecord) -> Result<f64> {
    let eta_old = eta.eval(&record.u_n)?;
    if eta.regime == Regime::Conservative {
        return Ok(eta_old);
    }
    let mut acc = 0.0;
    for ((b, u), rates) in scheme.b.iter().zip(&record.stages).zip(&record.stage_rates) {
        let g = eta.grad(u)?;
        let f = rates.rhs();
        acc += b * g.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(eta_old + record.dt * acc)
}

fn affine(u_old: &[f64], u_new: &[f64], gamma: f64) -> Vec<f64> {
    u_old.iter().zip(u_new).map(|(a, b)| a + gamma * (b - a)).collect()
}

/// `eta(u_old + gamma (u_new - u_old)) - (eta_old + gamma (eta_est - eta_old))`.
pub fn residual_classical(
    eta: &EntropyFunctional,
    u_old: &[f64],
    u_new: &[f64],
    eta_old: f64,
    eta_est: f64,
    gamma: f64,
) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(eta.eval(&affine(u_old, u_new, gamma))? - (eta_old + gamma * (eta_est - eta_old)))
}

/// Componentwise `u_new^gamma u_old^(1 - gamma)` on the first `dim`
/// components, affine on the remaining ones.
pub fn geometric_state(u_old: &[f64], u_new: &[f64], dim: usize, gamma: f64) -> Vec<f64> {
    let mut u: Vec<f64> = u_old[..dim].iter().zip(&u_new[..dim]).map(|(&a, &b)| geometric_blend(a, b, gamma)).collect();
    u.extend(affine(&u_old[dim..], &u_new[dim..], gamma));
    u
}

/// `eta(u_new^gamma u_old^(1 - gamma)) - (eta_old + gamma (eta_est - eta_old))`
/// with all components treated geometrically.
pub fn residual_geometric(
    eta: &EntropyFunctional,
    u_old: &[f64],
    u_new: &[f64],
    eta_old: f64,
    eta_est: f64,
    gamma: f64,
) -> Result<f64> {
    let u = geometric_state(u_old, u_new, u_old.len(), gamma);
    Ok(eta.eval(&u)? - (eta_old + gamma * (eta_est - eta_old)))
}

/// Residual of the linearly implicit relaxed update and its derivative.
pub fn residual_implicit(
    eta: &EntropyFunctional,
    scheme: &MpScheme,
    record: &StepRecord,
    eta_old: f64,
    eta_est: f64,
    gamma: f64,
    sigma_mode: SigmaMode,
) -> Result<(f64, f64)> {
    let solve = GammaSolve::new(scheme, record, gamma, sigma_mode)?;
    let r = eta.eval(&solve.u)? - (eta_old + gamma * (eta_est - eta_old));
    let du = solve.derivative(record)?;
    let g = eta.grad(&solve.u)?;
    let dr = g.iter().zip(&du).map(|(a, b)| a * b).sum::<f64>() - (eta_est - eta_old);
    Ok((r, dr))
}

/// Relaxes one completed step.
///
/// Configuration errors are returned as `Err`; a root search that does not
/// succeed yields an outcome with [`RelaxStatus::Failed`].
pub fn relax_step(
    eta: &EntropyFunctional,
    scheme: &MpScheme,
    record: &StepRecord,
    cfg: &RelaxConfig,
) -> Result<RelaxOutcome> {
    let t_new = record.t_n + record.dt;
    let unrelaxed = |status| -> Result<RelaxOutcome> {
        Ok(RelaxOutcome {
            gamma: 1.0,
            u_relaxed: record.u_next.clone(),
            t_relaxed: t_new,
            eta_after: eta.eval(&record.u_next)?,
            iterations: 0,
            status,
            residual: f64::NAN,
        })
    };
    if cfg.mode == RelaxMode::None {
        return unrelaxed(RelaxStatus::Skipped);
    }
    cfg.validate()?;
    if cfg.mode == RelaxMode::Geometric && !eta.monotone_nondecreasing && !cfg.allow_non_monotone {
        return Err(Error::InvalidParameter(format!(
            "geometric relaxation needs a functional that is non-decreasing in every argument; \
             '{}' is not (override with allow_non_monotone)",
            eta.name
        )));
    }
    let eta_old = eta.eval(&record.u_n)?;
    let eta_est = entropy_estimate(eta, scheme, record)?;
    let mut settings = RootSettings {
        tol: cfg.gamma_tol * eta_old.abs().max(1.0),
        gamma_min: cfg.gamma_min,
        gamma_max: cfg.gamma_max,
        max_iters: cfg.max_iters,
    };
    let (u_old, u_new) = (&record.u_n, &record.u_next);
    let d = record.dim();

    let result = match cfg.mode {
        RelaxMode::ClampedDissipative => {
            let r1 = residual_classical(eta, u_old, u_new, eta_old, eta_est, 1.0)?;
            if r1 <= settings.tol {
                let status = if r1.abs() <= settings.tol { RelaxStatus::Converged } else { RelaxStatus::ClampedToOne };
                let mut out = unrelaxed(status)?;
                out.residual = r1;
                return Ok(out);
            }
            // r(0) = 0 and r(1) > 0: for convex eta the root lies in (0, 1)
            settings.gamma_max = 1.0;
            solve_scalar(
                |g, want| {
                    let r = residual_classical(eta, u_old, u_new, eta_old, eta_est, g)?;
                    if !want {
                        return Ok((r, None));
                    }
                    let grad = eta.grad(&affine(u_old, u_new, g))?;
                    let dr = grad.iter().zip(u_new.iter().zip(u_old)).map(|(a, (b, c))| a * (b - c)).sum::<f64>()
                        - (eta_est - eta_old);
                    Ok((r, Some(dr)))
                },
                cfg.solver,
                &settings,
            )
        }
        RelaxMode::Geometric => {
            solve_scalar(
                |g, want| {
                    let u = geometric_state(u_old, u_new, d, g);
                    let r = eta.eval(&u)? - (eta_old + g * (eta_est - eta_old));
                    if !want {
                        return Ok((r, None));
                    }
                    let grad = eta.grad(&u)?;
                    let du = (0..u.len()).map(|k| {
                        if k < d {
                            u[k] * (u_new[k].ln() - u_old[k].ln())
                        } else {
                            u_new[k] - u_old[k]
                        }
                    });
                    let dr = grad.iter().zip(du).map(|(a, b)| a * b).sum::<f64>() - (eta_est - eta_old);
                    Ok((r, Some(dr)))
                },
                cfg.solver,
                &settings,
            )
        }
        RelaxMode::Implicit => solve_scalar(
            |g, want| {
                if want {
                    let (r, dr) = residual_implicit(eta, scheme, record, eta_old, eta_est, g, cfg.sigma_mode)?;
                    Ok((r, Some(dr)))
                } else {
                    let u = GammaSolve::new(scheme, record, g, cfg.sigma_mode)?.u;
                    Ok((eta.eval(&u)? - (eta_old + g * (eta_est - eta_old)), None))
                }
            },
            cfg.solver,
            &settings,
        ),
        RelaxMode::None => unreachable!(),
    };

    if !result.converged {
        return Ok(RelaxOutcome {
            gamma: result.gamma,
            u_relaxed: record.u_next.clone(),
            t_relaxed: t_new,
            eta_after: f64::NAN,
            iterations: result.iterations,
            status: RelaxStatus::Failed,
            residual: result.residual,
        });
    }
    let gamma = result.gamma;
    let u_relaxed = if gamma == 1.0 {
        record.u_next.clone()
    } else {
        match cfg.mode {
            RelaxMode::ClampedDissipative => affine(u_old, u_new, gamma),
            RelaxMode::Geometric => geometric_state(u_old, u_new, d, gamma),
            _ => GammaSolve::new(scheme, record, gamma, cfg.sigma_mode)?.u,
        }
    };
    Ok(RelaxOutcome {
        gamma,
        eta_after: eta.eval(&u_relaxed)?,
        u_relaxed,
        t_relaxed: record.t_n + gamma * record.dt,
        iterations: result.iterations,
        status: RelaxStatus::Converged,
        residual: result.residual,
    })
}
