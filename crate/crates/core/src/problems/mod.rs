//! Ready-to-run test problems.

pub mod advection;
pub mod euler;
pub mod lotka_volterra;
pub mod means;
pub mod pme;
pub mod stratospheric;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::control::{Adaptivity, IntegrateConfig};
use crate::entropy::EntropyFunctional;
use crate::error::{Error, Result};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::{RelaxConfig, RelaxMode};
use crate::roots::Solver;
use crate::scheme::MpScheme;
use crate::stepper::step;

pub use advection::EntropyKind;

/// Uniform cell-centered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub dx: f64,
}

impl Mesh {
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        Self { n, lo, hi, dx: (hi - lo) / n as f64 }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.lo + (i as f64 + 0.5) * self.dx).collect()
    }
}

/// Run settings a problem is usually integrated with.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub scheme: MpScheme,
    pub dt0: f64,
    pub relax: RelaxMode,
    pub solver: Solver,
    pub sigma_mode: SigmaMode,
    /// Step-size policy for relaxed runs.
    pub adaptivity: Adaptivity,
    /// Step-size policy when relaxation is off.
    pub unrelaxed_adaptivity: Adaptivity,
    pub rtol: f64,
    pub atol: f64,
    /// Admissible relaxation parameters `(gamma_min, gamma_max]`.
    pub gamma_bounds: (f64, f64),
}

impl Defaults {
    /// Relaxation settings for the given mode.
    pub fn relax_config(&self, mode: RelaxMode) -> RelaxConfig {
        RelaxConfig {
            mode,
            solver: self.solver,
            sigma_mode: self.sigma_mode,
            gamma_min: self.gamma_bounds.0,
            gamma_max: self.gamma_bounds.1,
            ..RelaxConfig::default()
        }
    }

    /// Driver settings for the given relaxation mode.
    pub fn integrate_config(&self, mode: RelaxMode) -> IntegrateConfig {
        let adaptivity = if mode == RelaxMode::None { self.unrelaxed_adaptivity } else { self.adaptivity };
        IntegrateConfig {
            relax: self.relax_config(mode),
            adaptivity,
            rtol: self.rtol,
            atol: self.atol,
            ..IntegrateConfig::fixed(self.dt0)
        }
    }
}

/// `(gamma_min, gamma_max]` used unless a problem needs a narrower window.
pub const DEFAULT_GAMMA_BOUNDS: (f64, f64) = (1e-6, 10.0);

pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// How errors against the true solution are measured.
#[derive(Clone)]
pub enum Reference {
    /// Closed-form solution of the semidiscrete problem's continuous limit.
    Exact(ExactFn),
    /// Fine-step integration with [`Oracle`].
    Oracle,
}

impl std::fmt::Debug for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reference::Exact(_) => f.write_str("Exact"),
            Reference::Oracle => f.write_str("Oracle"),
        }
    }
}

/// A problem instance with everything needed to run it.
#[derive(Clone)]
pub struct ProblemDescriptor {
    pub name: &'static str,
    pub sys: Arc<dyn PdrsSystem>,
    /// Functionals to monitor; the first one drives relaxation.
    pub eta: Vec<EntropyFunctional>,
    pub u0: Vec<f64>,
    pub tspan: (f64, f64),
    pub defaults: Defaults,
    pub reference: Reference,
    pub mesh: Option<Mesh>,
    /// Resolved problem parameters, for run metadata.
    pub params: Vec<(String, String)>,
}

impl std::fmt::Debug for ProblemDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemDescriptor")
            .field("name", &self.name)
            .field("dim", &self.sys.dim())
            .field("tspan", &self.tspan)
            .field("params", &self.params)
            .finish()
    }
}

impl ProblemDescriptor {
    pub fn entropy(&self) -> Option<&EntropyFunctional> {
        self.eta.first()
    }
}

/// Registered problem names with a one-line description.
pub const PROBLEMS: &[(&str, &str)] = &[
    ("lotka_volterra", "Lotka-Volterra predator-prey system with rest terms"),
    ("stratospheric", "stiff stratospheric reaction system, two linear invariants"),
    ("advection", "periodic linear advection with entropy-conservative fluxes (kind=log|sqrt|inv, n)"),
    ("isothermal_euler", "periodic isothermal Euler Riemann problem (n, c)"),
    ("pme", "porous medium equation with Barenblatt reference (m, n)"),
];

/// Key-value problem parameters with checked lookup.
#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new(pairs: &[(String, String)]) -> Self {
        Self { values: pairs.iter().cloned().collect() }
    }

    /// Parses `k=v,k=v`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("problem parameter '{item}' is not key=value")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    fn check_keys(&self, problem: &str, allowed: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParameter(format!(
                "unknown parameter '{k}' for problem {problem} (allowed: {})",
                if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
            ))),
            None => Ok(()),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse {key}={v}"))),
            None => Ok(default),
        }
    }
}

/// Builds a registered problem from its name and parameters.
pub fn build_problem(name: &str, params: &Params) -> Result<ProblemDescriptor> {
    match name {
        "lotka_volterra" => {
            params.check_keys(name, &[])?;
            Ok(lotka_volterra::lotka_volterra())
        }
        "stratospheric" => {
            params.check_keys(name, &[])?;
            Ok(stratospheric::stratospheric())
        }
        "advection" => {
            params.check_keys(name, &["n", "kind"])?;
            let kind: EntropyKind = params.get("kind", EntropyKind::Log)?;
            advection::advection_fv(params.get("n", 100)?, kind)
        }
        "isothermal_euler" => {
            params.check_keys(name, &["n", "c"])?;
            euler::isothermal_euler_fv(params.get("n", 100)?, params.get("c", 1.0)?)
        }
        "pme" => {
            params.check_keys(name, &["n", "m"])?;
            pme::porous_medium(params.get("n", 160)?, params.get("m", 3.0)?)
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown problem '{name}' (registered: {})",
            PROBLEMS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Step-size divisor of the fine-step reference.
pub const ORACLE_REFINEMENT: f64 = 1000.0;

/// Fine-step reference integrator: unrelaxed MPRK43I(0.5, 0.75) with a
/// fixed step, advanced monotonically to requested times.
pub struct Oracle<'a> {
    sys: &'a dyn PdrsSystem,
    scheme: MpScheme,
    h: f64,
    t: f64,
    u: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(sys: &'a dyn PdrsSystem, t0: f64, u0: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("oracle step must be positive, got {h}")));
        }
        Ok(Self { sys, scheme: MpScheme::mprk43i(0.5, 0.75)?, h, t: t0, u: u0.to_vec() })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// State at `t`, which must not lie before the last requested time.
    pub fn advance_to(&mut self, t: f64) -> Result<&[f64]> {
        if t < self.t {
            return Err(Error::InvalidParameter(format!("oracle cannot go back from {} to {t}", self.t)));
        }
        while t - self.t > 1e-14 * t.abs().max(1.0) {
            let h = self.h.min(t - self.t);
            self.u = step(self.sys, &self.scheme, self.t, &self.u, h)?.u_next;
            self.t = if h == t - self.t { t } else { self.t + h };
        }
        Ok(&self.u)
    }
}
