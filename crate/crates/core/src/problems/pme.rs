//! Porous medium equation `u_t = (u^m)_xx` on `[-6, 6]`.

use std::sync::Arc;

use super::{Defaults, Mesh, ProblemDescriptor, Reference, DEFAULT_GAMMA_BOUNDS};
use crate::control::Adaptivity;
use crate::entropy::{EntropyFunctional, Regime};
use crate::error::{Error, Result};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::RelaxMode;
use crate::roots::Solver;
use crate::scheme::MpScheme;

/// Positive floor applied where the Barenblatt profile vanishes.
pub const INITIAL_FLOOR: f64 = 1e-30;

/// Self-similar Barenblatt solution.
pub fn barenblatt(m: f64, t: f64, x: f64) -> f64 {
    let k = 1.0 / (m + 1.0);
    let inner = 1.0 - k * (m - 1.0) / (2.0 * m) * x * x / t.powf(2.0 * k);
    t.powf(-k) * inner.max(0.0).powf(1.0 / (m - 1.0))
}

/// Half-width of the Barenblatt support at time `t`.
pub fn support_radius(m: f64, t: f64) -> f64 {
    let k = 1.0 / (m + 1.0);
    (2.0 * m / (k * (m - 1.0))).sqrt() * t.powf(k)
}

#[derive(Debug, Clone)]
pub struct PorousMedium {
    pub mesh: Mesh,
    pub m: f64,
    pattern: Vec<(usize, usize)>,
    invariants: Vec<Vec<f64>>,
}

impl PorousMedium {
    pub fn new(n: usize, m: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("porous medium needs at least 3 cells, got {n}")));
        }
        if !(m > 1.0) {
            return Err(Error::InvalidParameter(format!("porous medium exponent must exceed 1, got {m}")));
        }
        let pattern = (0..n - 1).flat_map(|i| [(i, i + 1), (i + 1, i)]).collect();
        Ok(Self { mesh: Mesh::new(n, -6.0, 6.0), m, pattern, invariants: vec![vec![1.0; n]] })
    }

    fn a(&self, u: f64) -> f64 {
        self.m * u.powf(self.m - 1.0)
    }
}

impl PdrsSystem for PorousMedium {
    fn dim(&self) -> usize {
        self.mesh.n
    }

    /// Interior cells exchange with both neighbours through the averaged
    /// diffusivity; the two boundary cells gain only from their neighbour's
    /// own diffusivity.
    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        let n = self.mesh.n;
        let w = 2.0 * self.mesh.dx * self.mesh.dx;
        if nu + 1 != k && k + 1 != nu {
            return 0.0;
        }
        if k == 0 || k == n - 1 {
            self.a(u[nu]) * u[nu] / w
        } else {
            (self.a(u[k]) + self.a(u[nu])) * u[nu] / w
        }
    }

    fn sparsity(&self) -> Option<&[(usize, usize)]> {
        Some(&self.pattern)
    }

    fn linear_invariants(&self) -> &[Vec<f64>] {
        &self.invariants
    }
}

/// `dx^2 / 2 * sum_i u_i^2`.
pub fn pme_entropy(dx: f64) -> EntropyFunctional {
    EntropyFunctional::quadratic("quadratic_entropy", Regime::Dissipative, dx * dx).with_flags(true, true)
}

pub fn porous_medium(n: usize, m: f64) -> Result<ProblemDescriptor> {
    let sys = PorousMedium::new(n, m)?;
    let mesh = sys.mesh.clone();
    let centers = mesh.centers();
    let u0 = centers.iter().map(|&x| barenblatt(m, 1.0, x).max(INITIAL_FLOOR)).collect();
    let scheme = if m == 3.0 {
        MpScheme::mpssprk2(0.5, 1.0)?
    } else if m == 5.0 {
        MpScheme::mprk43i(0.5, 0.75)?
    } else {
        MpScheme::mprk22(1.0)?
    };
    let exact: super::ExactFn = Arc::new(move |t| centers.iter().map(|&x| barenblatt(m, t, x)).collect());
    Ok(ProblemDescriptor {
        name: "pme",
        eta: vec![pme_entropy(mesh.dx)],
        u0,
        tspan: (1.0, 2.0),
        defaults: Defaults {
            scheme,
            dt0: mesh.dx,
            relax: RelaxMode::ClampedDissipative,
            solver: Solver::Newton,
            sigma_mode: SigmaMode::Frozen,
            adaptivity: Adaptivity::Fixed,
            unrelaxed_adaptivity: Adaptivity::Fixed,
            rtol: 1e-3,
            atol: 1e-3,
            gamma_bounds: DEFAULT_GAMMA_BOUNDS,
        },
        reference: Reference::Exact(exact),
        params: vec![
            ("n".into(), n.to_string()),
            ("m".into(), m.to_string()),
            ("initial_floor".into(), format!("{INITIAL_FLOOR:e}")),
        ],
        mesh: Some(mesh),
        sys: Arc::new(sys),
    })
}
