//! Periodic isothermal Euler equations with an entropy-conservative flux.
//!
//! The state is `(rho_1..rho_N, m_1..m_N)` with momentum `m = rho v`. The
//! densities form a production-destruction system obtained by splitting the
//! signed mass flux at every interface; the momenta are carried as an
//! explicit block.

use std::sync::Arc;

use super::means::{mean_arith, mean_log};
use super::{Defaults, Mesh, ProblemDescriptor, Reference, DEFAULT_GAMMA_BOUNDS};
use crate::control::Adaptivity;
use crate::entropy::{require_positive, EntropyFunctional, Regime};
use crate::error::{Error, Result};
use crate::gamma::SigmaMode;
use crate::pdrs::PdrsSystem;
use crate::relax::RelaxMode;
use crate::roots::Solver;
use crate::scheme::MpScheme;

/// Left and right Riemann states `(rho, rho v)`.
pub const LEFT_STATE: (f64, f64) = (0.8, 1e-3);
pub const RIGHT_STATE: (f64, f64) = (1.0, 1e-2);

#[derive(Debug, Clone)]
pub struct IsothermalEuler {
    pub mesh: Mesh,
    pub c: f64,
    pattern: Vec<(usize, usize)>,
    invariants: Vec<Vec<f64>>,
}

impl IsothermalEuler {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("isothermal Euler needs at least 3 cells, got {n}")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("sound speed must be positive, got {c}")));
        }
        let mesh = Mesh::new(n, -1.0, 1.0);
        let pattern = (0..n).flat_map(|i| [((i + 1) % n, i), (i, (i + 1) % n)]).collect();
        let mass = [vec![1.0; n], vec![0.0; n]].concat();
        let momentum = [vec![0.0; n], vec![1.0; n]].concat();
        Ok(Self { mesh, c, pattern, invariants: vec![mass, momentum] })
    }

    /// Mass and momentum flux at the interface between cells `i` and `i + 1`.
    pub fn interface_flux(&self, i: usize, u: &[f64]) -> Result<(f64, f64)> {
        let n = self.mesh.n;
        let j = (i + 1) % n;
        let (rl, rr) = (u[i], u[j]);
        let (vl, vr) = (u[n + i] / rl, u[n + j] / rr);
        let rho = mean_log(rl, rr)?;
        let v = mean_arith(vl, vr);
        let c2 = self.c * self.c;
        Ok((rho * v, rho * v * v + mean_arith(c2 * rl, c2 * rr)))
    }
}

impl PdrsSystem for IsothermalEuler {
    fn dim(&self) -> usize {
        self.mesh.n
    }

    fn explicit_dim(&self) -> usize {
        self.mesh.n
    }

    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        let n = self.mesh.n;
        let flux = |i| self.interface_flux(i, u).map_or(f64::NAN, |f| f.0);
        if k == (nu + 1) % n {
            flux(nu).max(0.0) / self.mesh.dx
        } else if nu == (k + 1) % n {
            -flux(k).min(0.0) / self.mesh.dx
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

    fn explicit_rhs(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let n = self.mesh.n;
        let fm: Vec<f64> = (0..n).map(|i| self.interface_flux(i, u).map_or(f64::NAN, |f| f.1)).collect();
        for i in 0..n {
            out[i] = -(fm[i] - fm[(i + n - 1) % n]) / self.mesh.dx;
        }
    }
}

/// `dx * sum_i (m_i^2 / (2 rho_i) + c^2 rho_i ln rho_i)`.
pub fn euler_entropy(n: usize, dx: f64, c: f64) -> EntropyFunctional {
    let c2 = c * c;
    let what = "isothermal Euler entropy";
    EntropyFunctional::new(
        "total_energy",
        Regime::Conservative,
        move |u| {
            require_positive(u, n, what)?;
            Ok(dx * (0..n).map(|i| 0.5 * u[n + i] * u[n + i] / u[i] + c2 * u[i] * u[i].ln()).sum::<f64>())
        },
        move |u| {
            require_positive(u, n, what)?;
            let mut g = vec![0.0; 2 * n];
            for i in 0..n {
                let v = u[n + i] / u[i];
                g[i] = dx * (-0.5 * v * v + c2 * (u[i].ln() + 1.0));
                g[n + i] = dx * v;
            }
            Ok(g)
        },
    )
    .with_flags(false, true)
}

pub fn isothermal_euler_fv(n: usize, c: f64) -> Result<ProblemDescriptor> {
    let sys = IsothermalEuler::new(n, c)?;
    let mesh = sys.mesh.clone();
    let centers = mesh.centers();
    let mut u0 = vec![0.0; 2 * n];
    for (i, x) in centers.iter().enumerate() {
        let (rho, m) = if *x < 0.0 { LEFT_STATE } else { RIGHT_STATE };
        u0[i] = rho;
        u0[n + i] = m;
    }
    Ok(ProblemDescriptor {
        name: "isothermal_euler",
        eta: vec![euler_entropy(n, mesh.dx, c)],
        u0,
        tspan: (0.0, 1.0),
        defaults: Defaults {
            scheme: MpScheme::mprk22(1.0)?,
            dt0: mesh.dx,
            relax: RelaxMode::Implicit,
            solver: Solver::Newton,
            sigma_mode: SigmaMode::Frozen,
            adaptivity: Adaptivity::PidAndRelax,
            unrelaxed_adaptivity: Adaptivity::Pid,
            rtol: 1e-3,
            atol: 1e-3,
            gamma_bounds: DEFAULT_GAMMA_BOUNDS,
        },
        reference: Reference::Oracle,
        params: vec![("n".into(), n.to_string()), ("c".into(), c.to_string()), ("domain".into(), "[-1,1]".into())],
        mesh: Some(mesh),
        sys: Arc::new(sys),
    })
}
