//! Stiff stratospheric reaction system in scaled variables.
//!
//! Species `(O1D, O, O3, O2, NO, NO2)` are scaled by their oxygen counts
//! `(1, 1, 3, 2, 1, 2)` so that total oxygen becomes `sum_k u_k`. The second
//! invariant (total nitrogen) is `u5 + u6 / 2`. Time is in seconds.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Defaults, ProblemDescriptor, Reference};
use crate::control::Adaptivity;
use crate::entropy::{EntropyFunctional, Regime};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::RelaxMode;
use crate::roots::Solver;
use crate::scheme::MpScheme;

pub const K2: f64 = 8.018e-17;
pub const K4: f64 = 1.576e-15;
pub const K6: f64 = 7.110e-11;
pub const M_AIR: f64 = 8.120e16;
pub const K7: f64 = 1.200e-10;
pub const K8: f64 = 6.062e-15;
pub const K9: f64 = 1.069e-11;
pub const K11: f64 = 1e-8;
/// Sunrise and sunset in hours.
pub const T_RISE: f64 = 4.5;
pub const T_SET: f64 = 19.5;

/// Oxygen atoms per molecule, used to scale the unscaled concentrations.
pub const OXYGEN_COUNT: [f64; 6] = [1.0, 1.0, 3.0, 2.0, 1.0, 2.0];
/// Unscaled initial concentrations (molecules per cm^3).
pub const W0: [f64; 6] = [9.906e1, 6.624e8, 5.326e11, 1.697e16, 4.000e6, 1.093e9];

/// Relaxation window for the relaxed default run.
pub const STIFF_GAMMA_BOUNDS: (f64, f64) = (0.5, 2.0);

/// Daylight factor at time `t` (seconds).
pub fn daylight(t: f64) -> f64 {
    let hour = (t / 3600.0).rem_euclid(24.0);
    if (T_RISE..=T_SET).contains(&hour) {
        let x = (2.0 * hour - T_RISE - T_SET) / (T_SET - T_RISE);
        0.5 + 0.5 * (PI * x.abs() * x).cos()
    } else {
        0.0
    }
}

/// Reaction rates `r_1..r_11` (index 0 unused) in scaled variables.
pub fn reaction_rates(t: f64, u: &[f64]) -> [f64; 12] {
    let s = daylight(t);
    let k1 = s * s * s * 2.643e-10;
    let k3 = s * 6.120e-4;
    let k5 = s * s * 1.070e-3;
    let k10 = s * 1.289e-2;
    [
        0.0,
        k1 * u[3],
        K2 * u[1] * u[3],
        k3 * u[2],
        K4 * u[1] * u[2],
        k5 * u[2],
        K6 * M_AIR * u[0],
        K7 * u[0] * u[2],
        K8 * u[2] * u[4],
        K9 * u[1] * u[5],
        k10 * u[5],
        K11 * u[1] * u[4],
    ]
}

/// Destruction rate `d_{ij}` (zero-based) from reaction rates `r`.
fn destruction_from(i: usize, j: usize, r: &[f64; 12]) -> f64 {
    const THIRD: f64 = 1.0 / 3.0;
    match (i, j) {
        (0, 1) => r[6],
        (0, 3) => THIRD * r[7],
        (1, 2) => 0.5 * r[2],
        (1, 3) => THIRD * r[4],
        (1, 4) => 0.5 * r[9],
        (1, 5) => r[11],
        (2, 0) => THIRD * r[5],
        (2, 1) => THIRD * r[3],
        (2, 5) => THIRD * r[8],
        (2, 3) => 2.0 * THIRD * r[3] + r[4] + 2.0 * THIRD * r[5] + r[7] + 2.0 * THIRD * r[8],
        (3, 1) => r[1],
        (3, 2) => r[2],
        (4, 5) => r[11] + THIRD * r[8],
        (5, 1) => 0.5 * r[10],
        (5, 3) => r[9],
        (5, 4) => 0.5 * r[10],
        _ => 0.0,
    }
}

/// Nonzero destruction pairs `(i, j)`.
const DESTRUCTION_PAIRS: [(usize, usize); 16] = [
    (0, 1),
    (0, 3),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 0),
    (2, 1),
    (2, 5),
    (2, 3),
    (3, 1),
    (3, 2),
    (4, 5),
    (5, 1),
    (5, 3),
    (5, 4),
];

/// Production pairs `(k, nu)` with `p_{k nu} = d_{nu k}`.
const PRODUCTION_PAIRS: [(usize, usize); 16] = {
    let mut out = [(0, 0); 16];
    let mut i = 0;
    while i < 16 {
        out[i] = (DESTRUCTION_PAIRS[i].1, DESTRUCTION_PAIRS[i].0);
        i += 1;
    }
    out
};

#[derive(Debug, Clone)]
pub struct Stratospheric {
    invariants: Vec<Vec<f64>>,
}

impl Default for Stratospheric {
    fn default() -> Self {
        Self { invariants: vec![vec![1.0; 6], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.5]] }
    }
}

impl PdrsSystem for Stratospheric {
    fn dim(&self) -> usize {
        6
    }

    fn production(&self, k: usize, nu: usize, t: f64, u: &[f64]) -> f64 {
        destruction_from(nu, k, &reaction_rates(t, u))
    }

    fn sparsity(&self) -> Option<&[(usize, usize)]> {
        Some(&PRODUCTION_PAIRS)
    }

    fn linear_invariants(&self) -> &[Vec<f64>] {
        &self.invariants
    }

    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Scaled initial state.
pub fn initial_state() -> Vec<f64> {
    W0.iter().zip(OXYGEN_COUNT).map(|(w, n)| w * n).collect()
}

pub fn stratospheric() -> ProblemDescriptor {
    let sys = Stratospheric::default();
    let nitrogen = EntropyFunctional::linear("nitrogen", Regime::Conservative, sys.invariants[1].clone());
    ProblemDescriptor {
        name: "stratospheric",
        sys: Arc::new(sys),
        eta: vec![nitrogen],
        u0: initial_state(),
        tspan: (12.0 * 3600.0, 84.0 * 3600.0),
        defaults: Defaults {
            scheme: MpScheme::mprk22(1.0).expect("valid scheme"),
            dt0: 0.01 * 3600.0,
            relax: RelaxMode::Implicit,
            solver: Solver::RegulaFalsi,
            sigma_mode: SigmaMode::Frozen,
            // the relaxed run adapts the step only through relaxation success
            adaptivity: Adaptivity::RelaxOnly,
            unrelaxed_adaptivity: Adaptivity::Pid,
            rtol: 1e-3,
            atol: 1e-3,
            // at error-controlled steps the stiff daylight chemistry only has roots
            // near zero; a narrow window turns those into step reductions
            gamma_bounds: STIFF_GAMMA_BOUNDS,
        },
        reference: Reference::Oracle,
        mesh: None,
        params: vec![],
    }
}
