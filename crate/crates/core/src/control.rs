//! Time-integration driver with optional error control and relaxation.

use std::fmt;
use std::str::FromStr;

use crate::entropy::EntropyFunctional;
use crate::error::{Error, Result};
use crate::pdrs::PdrsSystem;
use crate::relax::{relax_step, RelaxConfig, RelaxMode, RelaxOutcome, RelaxStatus};
use crate::scheme::MpScheme;
use crate::stepper::{step, StepRecord};

pub const PID_BETA: [f64; 3] = [0.7, 0.4, 0.0];
pub const SAFETY: f64 = 0.9;
pub const FACTOR_MIN: f64 = 0.2;
pub const FACTOR_MAX: f64 = 5.0;
pub const RELAX_GROWTH: f64 = 1.01;
pub const RELAX_SHRINK: f64 = 0.9;

/// Step-size controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub dt: f64,
    /// Scaled errors of the two previous accepted steps, most recent first.
    pub err_history: [Option<f64>; 2],
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub pid: [f64; 3],
    pub safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl ControllerState {
    /// Controller for the interval `[t0, t_end]`: `dt_min = 1e-12 (t_end - t0)`,
    /// `dt_max = t_end - t0`.
    pub fn new(dt0: f64, tol_rel: f64, tol_abs: f64, t0: f64, t_end: f64) -> Self {
        let span = t_end - t0;
        let (dt_min, dt_max) = (1e-12 * span, span);
        Self {
            dt: dt0.clamp(dt_min, dt_max),
            err_history: [None, None],
            tol_rel,
            tol_abs,
            pid: PID_BETA,
            safety: SAFETY,
            dt_min,
            dt_max,
        }
    }

    fn factor(&self, err: f64, order_hat: usize) -> f64 {
        let o = order_hat as f64;
        let eps = |e: Option<f64>| e.map_or(1.0, |e| 1.0 / e.max(1e-16));
        self.safety
            * eps(Some(err)).powf(self.pid[0] / o)
            * eps(self.err_history[0]).powf(self.pid[1] / o)
            * eps(self.err_history[1]).powf(self.pid[2] / o)
    }

    /// New step size after an accepted step with scaled error `err`; shifts
    /// the error history.
    pub fn pid_update(&mut self, err: f64, order_hat: usize) -> f64 {
        let f = self.factor(err, order_hat).clamp(FACTOR_MIN, FACTOR_MAX);
        self.err_history = [Some(err.max(1e-16)), self.err_history[0]];
        self.dt = (self.dt * f).clamp(self.dt_min, self.dt_max);
        self.dt
    }

    /// Smaller step size after a rejected step; the history is kept.
    ///
    /// Only the current error enters: with small errors in the history the
    /// full PID factor can exceed one and the step would be retried unchanged.
    pub fn pid_reject(&mut self, err: f64, order_hat: usize) -> f64 {
        let f = (self.safety * (1.0 / err.max(1e-16)).powf(self.pid[0] / order_hat as f64)).clamp(FACTOR_MIN, 1.0);
        self.dt = (self.dt * f).clamp(self.dt_min, self.dt_max);
        self.dt
    }

    /// `1.01 dt` after a successful relaxation, `0.9 dt` otherwise, clamped.
    pub fn relax_adapt(&self, dt: f64, relax_ok: bool) -> f64 {
        let f = if relax_ok { RELAX_GROWTH } else { RELAX_SHRINK };
        (dt * f).clamp(self.dt_min, self.dt_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adaptivity {
    #[default]
    Fixed,
    Pid,
    RelaxOnly,
    PidAndRelax,
}

impl Adaptivity {
    pub const ALL: [Adaptivity; 4] =
        [Adaptivity::Fixed, Adaptivity::Pid, Adaptivity::RelaxOnly, Adaptivity::PidAndRelax];

    pub fn name(self) -> &'static str {
        match self {
            Adaptivity::Fixed => "fixed",
            Adaptivity::Pid => "pid",
            Adaptivity::RelaxOnly => "relax",
            Adaptivity::PidAndRelax => "pid_relax",
        }
    }

    pub fn uses_pid(self) -> bool {
        matches!(self, Adaptivity::Pid | Adaptivity::PidAndRelax)
    }

    pub fn uses_relax_adapt(self) -> bool {
        matches!(self, Adaptivity::RelaxOnly | Adaptivity::PidAndRelax)
    }
}

impl fmt::Display for Adaptivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Adaptivity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown adaptivity '{s}' (expected fixed, pid, relax or pid_relax)"))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateConfig {
    pub relax: RelaxConfig,
    pub adaptivity: Adaptivity,
    pub dt0: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on attempted steps (accepted plus rejected).
    pub max_attempts: usize,
    /// Keep the full [`StepRecord`] of every accepted step.
    pub store_records: bool,
}

impl IntegrateConfig {
    pub fn fixed(dt0: f64) -> Self {
        Self {
            relax: RelaxConfig::default(),
            adaptivity: Adaptivity::Fixed,
            dt0,
            rtol: 1e-3,
            atol: 1e-3,
            max_attempts: 5_000_000,
            store_records: false,
        }
    }
}

/// One accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedStep {
    /// Time after the step (the relaxed time label when relaxation is on).
    pub t: f64,
    /// Base step size.
    pub dt: f64,
    pub gamma: f64,
    pub status: RelaxStatus,
    pub iterations: usize,
    /// Relaxed state (full vector).
    pub u: Vec<f64>,
    /// Functional value after the step, when a functional was supplied.
    pub eta: Option<f64>,
    /// Scaled error estimate, when error control is active.
    pub err_est: Option<f64>,
    pub record: Option<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t0: f64,
    pub u0: Vec<f64>,
    pub eta0: Option<f64>,
    pub steps: Vec<AcceptedStep>,
    pub rejected_error: usize,
    pub rejected_relax: usize,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.steps.last().map_or(self.t0, |s| s.t)
    }

    pub fn final_state(&self) -> &[f64] {
        self.steps.last().map_or(&self.u0, |s| &s.u)
    }

    pub fn max_gamma_deviation(&self) -> f64 {
        self.steps.iter().map(|s| (s.gamma - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Estimated order plus one and scaled RMS error of a base step.
///
/// Uses the second stage as embedded solution when it sits at `t_n + dt`,
/// and step doubling otherwise.
pub fn error_estimate<S: PdrsSystem + ?Sized>(
    sys: &S,
    scheme: &MpScheme,
    rec: &StepRecord,
    rtol: f64,
    atol: f64,
) -> Result<(f64, usize)> {
    let scaled = |a: &[f64], b: &[f64]| -> f64 {
        let n = a.len() as f64;
        let s: f64 = a.iter().zip(b).zip(&rec.u_n).map(|((x, y), u)| ((x - y) / (atol + rtol * u.abs())).powi(2)).sum();
        (s / n).sqrt()
    };
    if scheme.c.get(1) == Some(&1.0) {
        return Ok((scaled(&rec.u_next, &rec.stages[1]), 2));
    }
    let h = 0.5 * rec.dt;
    let half = step(sys, scheme, rec.t_n, &rec.u_n, h)?;
    let two = step(sys, scheme, rec.t_n + h, &half.u_next, h)?;
    let p = scheme.order as i32;
    Ok((scaled(&rec.u_next, &two.u_next) / (2f64.powi(p) - 1.0), scheme.order + 1))
}

/// Integrates from `(t0, u0)` to `t_end`.
///
/// Each attempt takes a base step, optionally checks the error estimate and
/// relaxes the result. Rejected attempts leave the state untouched. After a
/// relaxed step the integration continues from the relaxed time label; the
/// last step is sized to end at `t_end` before relaxation.
pub fn integrate<S: PdrsSystem + ?Sized>(
    sys: &S,
    scheme: &MpScheme,
    eta: Option<&EntropyFunctional>,
    cfg: &IntegrateConfig,
    t0: f64,
    u0: &[f64],
    t_end: f64,
) -> Result<Trajectory> {
    if !(t_end > t0) {
        return Err(Error::InvalidParameter(format!("need t_end > t0, got [{t0}, {t_end}]")));
    }
    if !(cfg.dt0 > 0.0) {
        return Err(Error::InvalidParameter(format!("initial step must be positive, got {}", cfg.dt0)));
    }
    let relaxing = cfg.relax.mode != RelaxMode::None;
    if relaxing && eta.is_none() {
        return Err(Error::InvalidParameter("relaxation needs a functional".into()));
    }
    if relaxing {
        cfg.relax.validate()?;
    }
    crate::pdrs::check_positive(u0, sys.dim())?;

    let span = t_end - t0;
    let mut ctrl = ControllerState::new(cfg.dt0, cfg.rtol, cfg.atol, t0, t_end);
    let base_dt = ctrl.dt;
    let mut traj = Trajectory { t0, u0: u0.to_vec(), eta0: eta.map(|e| e.eval(u0)).transpose()?, ..Default::default() };
    let (mut t, mut u) = (t0, u0.to_vec());
    // step size of the current attempt; may shrink below ctrl.dt on retries
    let mut dt = ctrl.dt;
    let mut attempts = 0;

    while t_end - t > 1e-12 * span {
        attempts += 1;
        if attempts > cfg.max_attempts {
            return Err(Error::Aborted { t, reason: format!("more than {} step attempts", cfg.max_attempts) });
        }
        if dt < ctrl.dt_min {
            return Err(Error::Aborted { t, reason: format!("step size {dt:e} fell below {:e}", ctrl.dt_min) });
        }
        let remaining = t_end - t;
        let last = dt >= remaining - 1e-10 * span;
        let h = if last && (remaining - dt).abs() > 1e-10 * span { remaining } else { dt };

        let rec = match step(sys, scheme, t, &u, h) {
            Ok(r) => r,
            Err(e @ (Error::Unsupported(_) | Error::InvalidParameter(_) | Error::Dimension { .. })) => return Err(e),
            Err(_) => {
                dt = 0.5 * h;
                continue;
            }
        };

        let mut err_est = None;
        if cfg.adaptivity.uses_pid() {
            let (err, order_hat) = error_estimate(sys, scheme, &rec, cfg.rtol, cfg.atol)?;
            if err > 1.0 {
                traj.rejected_error += 1;
                ctrl.dt = h;
                dt = ctrl.pid_reject(err, order_hat);
                continue;
            }
            err_est = Some((err, order_hat));
        }

        let outcome = match (relaxing, eta) {
            (true, Some(e)) => relax_step(e, scheme, &rec, &cfg.relax)?,
            _ => RelaxOutcome {
                gamma: 1.0,
                u_relaxed: rec.u_next.clone(),
                t_relaxed: t + h,
                eta_after: f64::NAN,
                iterations: 0,
                status: RelaxStatus::Skipped,
                residual: f64::NAN,
            },
        };
        if outcome.status == RelaxStatus::Failed {
            traj.rejected_relax += 1;
            dt = ctrl.relax_adapt(h, false);
            if dt >= h {
                return Err(Error::Aborted { t, reason: "relaxation keeps failing at the minimum step size".into() });
            }
            continue;
        }

        t = if last && outcome.gamma == 1.0 { t_end } else { outcome.t_relaxed };
        u = outcome.u_relaxed;
        let eta_after = match eta {
            Some(e) if outcome.status == RelaxStatus::Skipped => Some(e.eval(&u)?),
            Some(_) => Some(outcome.eta_after),
            None => None,
        };
        traj.steps.push(AcceptedStep {
            t,
            dt: h,
            gamma: outcome.gamma,
            status: outcome.status,
            iterations: outcome.iterations,
            u: u.clone(),
            eta: eta_after,
            err_est: err_est.map(|e| e.0),
            record: cfg.store_records.then_some(rec),
        });
        if last {
            break;
        }

        // next step size
        dt = match cfg.adaptivity {
            Adaptivity::Fixed => base_dt,
            Adaptivity::Pid | Adaptivity::PidAndRelax => {
                ctrl.dt = h;
                let (err, order_hat) = err_est.expect("error estimate computed");
                let mut next = ctrl.pid_update(err, order_hat);
                if cfg.adaptivity == Adaptivity::PidAndRelax && relaxing {
                    next = ctrl.relax_adapt(next, true);
                    ctrl.dt = next;
                }
                next
            }
            Adaptivity::RelaxOnly => {
                if relaxing {
                    ctrl.relax_adapt(h, true)
                } else {
                    h
                }
            }
        };
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Still;
    impl PdrsSystem for Still {
        fn dim(&self) -> usize {
            2
        }
        fn production(&self, _: usize, _: usize, _: f64, _: &[f64]) -> f64 {
            0.0
        }
    }

    fn ctrl() -> ControllerState {
        ControllerState::new(1.0, 1e-3, 1e-3, 0.0, 100.0)
    }

    #[test]
    fn pid_unit_error_keeps_dt_up_to_safety() {
        let mut c = ctrl();
        assert!((c.pid_update(1.0, 2) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn pid_doubles_for_small_error() {
        let mut c = ctrl();
        c.safety = 1.0;
        let dt = c.pid_update(2f64.powi(-2), 2);
        // eps^(0.7/2) with eps = 4
        assert!((dt - 4f64.powf(0.35)).abs() < 1e-14, "{dt}");
        let mut c = ctrl();
        c.safety = 1.0;
        c.pid = [1.0, 0.0, 0.0];
        assert!((c.pid_update(0.25, 2) - 2.0).abs() < 1e-15);
        assert!((c.pid_update(1e-20, 2) - 10.0).abs() < 1e-12, "growth clamp 5");
    }

    #[test]
    fn pid_third_history_slot_is_inert() {
        let mut a = ctrl();
        let mut b = ctrl();
        a.err_history = [Some(0.5), Some(1e-3)];
        b.err_history = [Some(0.5), Some(7.0)];
        assert_eq!(a.pid_update(0.3, 3), b.pid_update(0.3, 3));
    }

    #[test]
    fn relax_adapt_factors() {
        let c = ctrl();
        assert_eq!(c.relax_adapt(1.0, true), 1.01);
        assert_eq!(c.relax_adapt(1.0, false), 0.9);
        assert_eq!(c.relax_adapt(c.dt_min, false), c.dt_min);
        assert_eq!(c.relax_adapt(c.dt_max, true), c.dt_max);
    }

    #[test]
    fn zero_rates_replicate_initial_state() {
        let scheme = MpScheme::mprk22(1.0).unwrap();
        let traj = integrate(&Still, &scheme, None, &IntegrateConfig::fixed(0.1), 0.0, &[0.5, 2.0], 1.0).unwrap();
        assert_eq!(traj.steps.len(), 10);
        assert!(traj.steps.iter().all(|s| s.u == vec![0.5, 2.0] && s.gamma == 1.0));
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn final_step_is_truncated() {
        let scheme = MpScheme::mprk22(1.0).unwrap();
        let traj = integrate(&Still, &scheme, None, &IntegrateConfig::fixed(0.3), 0.0, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(traj.steps.len(), 4);
        assert!((traj.steps[3].dt - 0.1).abs() < 1e-15);
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn rejects_bad_interval() {
        let scheme = MpScheme::mprk22(1.0).unwrap();
        assert!(integrate(&Still, &scheme, None, &IntegrateConfig::fixed(0.1), 1.0, &[1.0, 1.0], 0.0).is_err());
        let mut cfg = IntegrateConfig::fixed(0.1);
        cfg.relax.mode = RelaxMode::Implicit;
        assert!(integrate(&Still, &scheme, None, &cfg, 0.0, &[1.0, 1.0], 1.0).is_err());
    }
}
