//! Scalar root finding for the relaxation parameter.
//!
//! All solvers start from `gamma = 1`. Residual evaluations that fail (for
//! example because a logarithmic entropy is evaluated outside its domain)
//! exclude that point instead of aborting the search.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Newton,
    RegulaFalsi,
    Bisection,
    Secant,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Newton, Solver::RegulaFalsi, Solver::Bisection, Solver::Secant];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Newton => "newton",
            Solver::RegulaFalsi => "regula_falsi",
            Solver::Bisection => "bisection",
            Solver::Secant => "secant",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown solver '{s}' (expected newton, regula_falsi, bisection or secant)"
            ))
        })
    }
}

/// Limits shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSettings {
    /// Absolute residual tolerance.
    pub tol: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub gamma: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RootResult {
    fn failed(gamma: f64, residual: f64, iterations: usize) -> Self {
        Self { gamma, residual, iterations, converged: false }
    }
}

/// Maximum number of residual probes used to find a sign change.
pub const MAX_PROBES: usize = 20;
const PROBES_PER_SIDE: usize = 9;

/// Finds a root of `f` in `(gamma_min, gamma_max]`.
///
/// `f(gamma, want_derivative)` returns the residual and, when asked for and
/// available, its derivative. Newton falls back to a one-sided difference
/// quotient when no derivative is supplied.
pub fn solve_scalar<F>(mut f: F, solver: Solver, s: &RootSettings) -> RootResult
where
    F: FnMut(f64, bool) -> Result<(f64, Option<f64>)>,
{
    let want = solver == Solver::Newton;
    let (r1, dr1) = match f(1.0, want) {
        Ok(v) => v,
        Err(_) => return RootResult::failed(1.0, f64::NAN, 0),
    };
    if r1.abs() <= s.tol {
        return RootResult { gamma: 1.0, residual: r1, iterations: 0, converged: true };
    }
    match solver {
        Solver::Newton => newton(&mut f, r1, dr1, s),
        _ => match find_bracket(&mut f, r1, s) {
            Some(br) => refine(&mut f, br, solver, s),
            None => RootResult::failed(1.0, r1, 0),
        },
    }
}

fn newton<F>(f: &mut F, r1: f64, dr1: Option<f64>, s: &RootSettings) -> RootResult
where
    F: FnMut(f64, bool) -> Result<(f64, Option<f64>)>,
{
    let (mut g, mut r) = (1.0, r1);
    let mut dr = dr1;
    for it in 1..=s.max_iters {
        let slope = match dr {
            Some(v) => v,
            None => {
                let h = 1e-7 * g;
                match f(g + h, false) {
                    Ok((rh, _)) => (rh - r) / h,
                    Err(_) => return RootResult::failed(g, r, it),
                }
            }
        };
        if !(slope.abs() > 0.0) || !slope.is_finite() {
            return RootResult::failed(g, r, it);
        }
        let mut delta = r / slope;
        let mut accepted = None;
        for _ in 0..30 {
            let g_new = g - delta;
            if !(g_new > s.gamma_min && g_new <= s.gamma_max) {
                return RootResult::failed(g_new, r, it);
            }
            match f(g_new, true) {
                Ok(v) => {
                    accepted = Some((g_new, v));
                    break;
                }
                Err(_) => delta *= 0.5,
            }
        }
        let Some((g_new, (r_new, dr_new))) = accepted else {
            return RootResult::failed(g, r, it);
        };
        g = g_new;
        r = r_new;
        dr = dr_new;
        if r.abs() <= s.tol {
            return RootResult { gamma: g, residual: r, iterations: it, converged: true };
        }
    }
    RootResult::failed(g, r, s.max_iters)
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
}

/// Walks outwards from 1 on geometric grids towards `gamma_min` and
/// `gamma_max`, alternating sides, and returns the first sign change.
fn find_bracket<F>(f: &mut F, r1: f64, s: &RootSettings) -> Option<Bracket>
where
    F: FnMut(f64, bool) -> Result<(f64, Option<f64>)>,
{
    let n = PROBES_PER_SIDE;
    let down = |i: usize| s.gamma_min.powf(i as f64 / n as f64);
    let up = |i: usize| s.gamma_max.powf(i as f64 / n as f64);
    let mut last = [(1.0, r1), (1.0, r1)];
    let mut open = [s.gamma_min < 1.0, s.gamma_max > 1.0];
    let mut probes = 1;
    for i in 1..=n {
        for side in 0..2 {
            if !open[side] || probes >= MAX_PROBES {
                continue;
            }
            let g = if side == 0 { down(i) } else { up(i) };
            probes += 1;
            match f(g, false) {
                Ok((r, _)) if r.is_finite() => {
                    let (gp, rp) = last[side];
                    if r == 0.0 || r.signum() != rp.signum() {
                        let (a, fa, b, fb) = if g < gp { (g, r, gp, rp) } else { (gp, rp, g, r) };
                        return Some(Bracket { a, fa, b, fb });
                    }
                    last[side] = (g, r);
                }
                _ => open[side] = false,
            }
        }
    }
    None
}

fn refine<F>(f: &mut F, mut br: Bracket, solver: Solver, s: &RootSettings) -> RootResult
where
    F: FnMut(f64, bool) -> Result<(f64, Option<f64>)>,
{
    for (g, r) in [(br.a, br.fa), (br.b, br.fb)] {
        if r.abs() <= s.tol {
            return RootResult { gamma: g, residual: r, iterations: 0, converged: true };
        }
    }
    // Illinois bookkeeping: which endpoint was retained last time
    let mut retained: i8 = 0;
    // secant history starts at the bracket endpoints
    let (mut x0, mut f0, mut x1, mut f1) = (br.a, br.fa, br.b, br.fb);
    for it in 1..=s.max_iters {
        let mid = 0.5 * (br.a + br.b);
        let candidate = match solver {
            Solver::Bisection => mid,
            Solver::RegulaFalsi => (br.a * br.fb - br.b * br.fa) / (br.fb - br.fa),
            Solver::Secant => {
                let x = x1 - f1 * (x1 - x0) / (f1 - f0);
                // safeguard: stay inside the current bracket
                if x.is_finite() && x > br.a && x < br.b {
                    x
                } else {
                    mid
                }
            }
            Solver::Newton => unreachable!(),
        };
        let g = if candidate.is_finite() && candidate > br.a && candidate < br.b { candidate } else { mid };
        let r = match f(g, false) {
            Ok((r, _)) if r.is_finite() => r,
            _ => return RootResult::failed(g, f64::NAN, it),
        };
        if r.abs() <= s.tol {
            return RootResult { gamma: g, residual: r, iterations: it, converged: true };
        }
        (x0, f0, x1, f1) = (x1, f1, g, r);
        if r.signum() == br.fa.signum() {
            br.a = g;
            br.fa = r;
            if solver == Solver::RegulaFalsi && retained == 1 {
                br.fb *= 0.5;
            }
            retained = 1;
        } else {
            br.b = g;
            br.fb = r;
            if solver == Solver::RegulaFalsi && retained == -1 {
                br.fa *= 0.5;
            }
            retained = -1;
        }
        if br.b - br.a <= f64::EPSILON * br.b {
            return RootResult::failed(g, r, it);
        }
    }
    let (g, r) = if br.fa.abs() < br.fb.abs() { (br.a, br.fa) } else { (br.b, br.fb) };
    RootResult::failed(g, r, s.max_iters)
}
