//! `u1' = 2 u1 - u1 u2`, `u2' = u1 u2 - u2`.

use std::sync::Arc;

use super::{Defaults, ProblemDescriptor, Reference, DEFAULT_GAMMA_BOUNDS};
use crate::control::Adaptivity;
use crate::entropy::{require_positive, EntropyFunctional, Regime};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::RelaxMode;
use crate::roots::Solver;
use crate::scheme::MpScheme;

/// Growth `r^P_1 = 2 u1`, predation `p21 = d12 = u1 u2`, decay `r^D_2 = u2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LotkaVolterra;

const PATTERN: [(usize, usize); 1] = [(1, 0)];

impl PdrsSystem for LotkaVolterra {
    fn dim(&self) -> usize {
        2
    }

    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        if (k, nu) == (1, 0) {
            u[0] * u[1]
        } else {
            0.0
        }
    }

    fn rest_production(&self, k: usize, _t: f64, u: &[f64]) -> f64 {
        if k == 0 {
            2.0 * u[0]
        } else {
            0.0
        }
    }

    fn rest_destruction(&self, k: usize, _t: f64, u: &[f64]) -> f64 {
        if k == 1 {
            u[1]
        } else {
            0.0
        }
    }

    fn has_rest_terms(&self) -> bool {
        true
    }

    fn sparsity(&self) -> Option<&[(usize, usize)]> {
        Some(&PATTERN)
    }
}

/// `ln u1 - u1 + 2 ln u2 - u2`.
pub fn lv_entropy() -> EntropyFunctional {
    EntropyFunctional::new(
        "lv_entropy",
        Regime::Conservative,
        |u| {
            require_positive(u, 2, "Lotka-Volterra entropy")?;
            Ok(u[0].ln() - u[0] + 2.0 * u[1].ln() - u[1])
        },
        |u| {
            require_positive(u, 2, "Lotka-Volterra entropy")?;
            Ok(vec![1.0 / u[0] - 1.0, 2.0 / u[1] - 1.0])
        },
    )
    .with_flags(false, false)
}

pub fn lotka_volterra() -> ProblemDescriptor {
    ProblemDescriptor {
        name: "lotka_volterra",
        sys: Arc::new(LotkaVolterra),
        eta: vec![lv_entropy()],
        u0: vec![2.0, 2.0],
        tspan: (0.0, 200.0),
        defaults: Defaults {
            scheme: MpScheme::mprk22(1.0).expect("valid scheme"),
            dt0: 1.0,
            relax: RelaxMode::Implicit,
            solver: Solver::Newton,
            sigma_mode: SigmaMode::Frozen,
            adaptivity: Adaptivity::Fixed,
            unrelaxed_adaptivity: Adaptivity::Fixed,
            rtol: 1e-3,
            atol: 1e-3,
            gamma_bounds: DEFAULT_GAMMA_BOUNDS,
        },
        reference: Reference::Oracle,
        mesh: None,
        params: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdrs::eval_rhs;

    #[test]
    fn entropy_at_initial_state() {
        let eta = lv_entropy();
        let v = eta.eval(&[2.0, 2.0]).unwrap();
        assert!((v - (3.0 * 2f64.ln() - 4.0)).abs() < 1e-15);
        assert!((v + 1.920_558_46).abs() < 1e-8);
        assert_eq!(eta.grad(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert!(eta.eval(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn equilibrium() {
        assert_eq!(eval_rhs(&LotkaVolterra, 0.0, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_hundred_unit_steps_stay_positive() {
        let scheme = MpScheme::mprk22(1.0).unwrap();
        let mut u = vec![2.0, 2.0];
        for n in 0..200 {
            let rec = crate::stepper::step(&LotkaVolterra, &scheme, n as f64, &u, 1.0).unwrap();
            assert!(rec.stages.iter().flatten().chain(&rec.u_next).all(|&v| v > 0.0));
            u = rec.u_next;
            assert!(u.iter().all(|v| v.is_finite()));
        }
    }
}
