//! Periodic linear advection `u_t + u_x = 0` on `[0, 2]` with
//! entropy-conservative two-point fluxes.
//!
//! The interface flux between cells `i` and `i + 1` is produced into the
//! right cell and destroyed from the left one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::means::{mean_geo, mean_harm, mean_log};
use super::{Defaults, Mesh, ProblemDescriptor, Reference, DEFAULT_GAMMA_BOUNDS};
use crate::control::Adaptivity;
use crate::entropy::{require_positive, EntropyFunctional, Regime};
use crate::error::{Error, Result};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::RelaxMode;
use crate::roots::Solver;
use crate::scheme::MpScheme;

/// Entropy `U` and its matching flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    /// `U = u ln u - u`, logarithmic-mean flux.
    Log,
    /// `U = -sqrt(u)`, geometric-mean flux.
    Sqrt,
    /// `U = 1 / u`, harmonic-mean flux.
    Inv,
}

impl EntropyKind {
    pub fn name(self) -> &'static str {
        match self {
            EntropyKind::Log => "log",
            EntropyKind::Sqrt => "sqrt",
            EntropyKind::Inv => "inv",
        }
    }

    pub fn flux(self, a: f64, b: f64) -> Result<f64> {
        match self {
            EntropyKind::Log => mean_log(a, b),
            EntropyKind::Sqrt => mean_geo(a, b),
            EntropyKind::Inv => mean_harm(a, b),
        }
    }

    pub fn density(self, u: f64) -> f64 {
        match self {
            EntropyKind::Log => u * u.ln() - u,
            EntropyKind::Sqrt => -u.sqrt(),
            EntropyKind::Inv => 1.0 / u,
        }
    }

    pub fn density_prime(self, u: f64) -> f64 {
        match self {
            EntropyKind::Log => u.ln(),
            EntropyKind::Sqrt => -0.5 / u.sqrt(),
            EntropyKind::Inv => -1.0 / (u * u),
        }
    }
}

impl fmt::Display for EntropyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntropyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(EntropyKind::Log),
            "sqrt" => Ok(EntropyKind::Sqrt),
            "inv" => Ok(EntropyKind::Inv),
            _ => Err(Error::InvalidParameter(format!(
                "unknown entropy kind '{s}' (expected log, sqrt or inv; the arithmetic-mean flux is not positivity preserving)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Advection {
    pub mesh: Mesh,
    pub kind: EntropyKind,
    pattern: Vec<(usize, usize)>,
    invariants: Vec<Vec<f64>>,
}

impl Advection {
    pub fn new(n: usize, kind: EntropyKind) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("advection needs at least 3 cells, got {n}")));
        }
        let mesh = Mesh::new(n, 0.0, 2.0);
        let pattern = (0..n).map(|i| ((i + 1) % n, i)).collect();
        Ok(Self { mesh, kind, pattern, invariants: vec![vec![1.0; n]] })
    }
}

impl PdrsSystem for Advection {
    fn dim(&self) -> usize {
        self.mesh.n
    }

    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        if k == (nu + 1) % self.mesh.n {
            self.kind.flux(u[nu], u[k]).unwrap_or(f64::NAN) / self.mesh.dx
        } else {
            0.0
        }
    }

    fn sparsity(&self) -> Option<&[(usize, usize)]> {
        Some(&self.pattern)
    }

    fn linear_invariants(&self) -> &[Vec<f64>] {
        &self.invariants
    }
}

/// `dx * sum_i U(u_i)`.
pub fn advection_entropy(kind: EntropyKind, n: usize, dx: f64) -> EntropyFunctional {
    let what = "advection entropy";
    EntropyFunctional::new(
        format!("entropy_{}", kind.name()),
        Regime::Conservative,
        move |u| {
            require_positive(u, n, what)?;
            Ok(dx * u[..n].iter().map(|&v| kind.density(v)).sum::<f64>())
        },
        move |u| {
            require_positive(u, n, what)?;
            Ok(u[..n].iter().map(|&v| dx * kind.density_prime(v)).collect())
        },
    )
    .with_flags(false, true)
}

pub fn initial_profile(x: f64) -> f64 {
    1.9 * (PI * x).sin() + 2.0
}

pub fn advection_fv(n: usize, kind: EntropyKind) -> Result<ProblemDescriptor> {
    let sys = Advection::new(n, kind)?;
    let mesh = sys.mesh.clone();
    let dx = mesh.dx;
    let (scheme, solver, adaptivity) = match kind {
        EntropyKind::Log => (MpScheme::mpssprk2(0.5, 1.0)?, Solver::Secant, Adaptivity::Fixed),
        EntropyKind::Sqrt => (MpScheme::mprk43i(0.5, 0.75)?, Solver::RegulaFalsi, Adaptivity::PidAndRelax),
        EntropyKind::Inv => (MpScheme::mprk22(1.0)?, Solver::Bisection, Adaptivity::PidAndRelax),
    };
    // the frozen denominators make the MPSSPRK2 gamma path almost entropy
    // neutral, which pushes the root far from one
    let sigma_mode = match kind {
        EntropyKind::Log => SigmaMode::Dense,
        EntropyKind::Sqrt => SigmaMode::Bootstrap,
        EntropyKind::Inv => SigmaMode::Frozen,
    };
    Ok(ProblemDescriptor {
        name: "advection",
        eta: vec![advection_entropy(kind, n, dx)],
        u0: mesh.centers().into_iter().map(initial_profile).collect(),
        tspan: (0.0, 2.0),
        defaults: Defaults {
            scheme,
            dt0: dx,
            relax: RelaxMode::Implicit,
            solver,
            sigma_mode,
            adaptivity,
            unrelaxed_adaptivity: if adaptivity == Adaptivity::Fixed { Adaptivity::Fixed } else { Adaptivity::Pid },
            rtol: 1e-3,
            atol: 1e-3,
            gamma_bounds: DEFAULT_GAMMA_BOUNDS,
        },
        reference: Reference::Oracle,
        params: vec![("n".into(), n.to_string()), ("kind".into(), kind.name().into())],
        mesh: Some(mesh),
        sys: Arc::new(sys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdrs::eval_rhs;

    #[test]
    fn constant_state_is_steady() {
        for kind in [EntropyKind::Log, EntropyKind::Sqrt, EntropyKind::Inv] {
            let sys = Advection::new(5, kind).unwrap();
            let f = eval_rhs(&sys, 0.0, &[1.7; 5]).unwrap();
            assert!(f.iter().all(|v| v.abs() < 1e-13), "{kind}: {f:?}");
        }
    }

    #[test]
    fn log_flux_between_one_and_e() {
        let e = std::f64::consts::E;
        assert!((EntropyKind::Log.flux(1.0, e).unwrap() - (e - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved_by_rhs() {
        let sys = Advection::new(7, EntropyKind::Log).unwrap();
        let u: Vec<f64> = (0..7).map(|i| 1.0 + i as f64 * 0.37).collect();
        let f = eval_rhs(&sys, 0.0, &u).unwrap();
        assert!(f.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn arithmetic_kind_is_rejected() {
        assert!("l2".parse::<EntropyKind>().is_err());
        assert!(advection_fv(2, EntropyKind::Log).is_err());
    }
}
