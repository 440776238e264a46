//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use relax_mprk_core::{EntropyFunctional, PdrsSystem, Regime};

/// Predation part of Lotka–Volterra: `p21 = d12 = u1 u2`, no rest terms.
pub struct LvPd;

impl PdrsSystem for LvPd {
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
}

/// `u1 -> u2` at unit rate.
pub struct Exchange;

impl PdrsSystem for Exchange {
    fn dim(&self) -> usize {
        2
    }
    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        if (k, nu) == (1, 0) {
            u[0]
        } else {
            0.0
        }
    }
}

/// Conservative PDS with `p_{k nu} = a_{k nu} u_nu sqrt(u_k)`; the ring
/// `nu -> nu + 1` always carries a positive rate.
pub struct RandomPds {
    pub a: Vec<Vec<f64>>,
}

impl RandomPds {
    pub fn sample<R: Rng>(rng: &mut R, d: usize) -> Self {
        let a = (0..d)
            .map(|k| {
                (0..d)
                    .map(|nu| match (nu + 1) % d == k {
                        _ if k == nu => 0.0,
                        true => rng.gen_range(0.1..2.0),
                        false if rng.gen_bool(0.3) => 0.0,
                        false => rng.gen_range(0.0..2.0),
                    })
                    .collect()
            })
            .collect();
        Self { a }
    }
}

impl PdrsSystem for RandomPds {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn production(&self, k: usize, nu: usize, _t: f64, u: &[f64]) -> f64 {
        self.a[k][nu] * u[nu] * u[k].sqrt()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

pub fn positive_state<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(0.05..2.0)).collect()
}

/// `sum u ln u`, driven towards its quadrature estimate.
pub fn u_log_u() -> EntropyFunctional {
    EntropyFunctional::new(
        "u_log_u",
        Regime::Dissipative,
        |u| Ok(u.iter().map(|v| v * v.ln()).sum()),
        |u| Ok(u.iter().map(|v| v.ln() + 1.0).collect()),
    )
}

pub fn sum(u: &[f64]) -> f64 {
    u.iter().sum()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
