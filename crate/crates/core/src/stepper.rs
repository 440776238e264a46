//! One-step maps of the modified Patankar schemes.
//!
//! Every stage, the sigma system of MPRK43I, and the update are linear
//! systems of the same shape: identity plus a weighted sum of production and
//! destruction rates, with each column divided by a Patankar-weight
//! denominator. [`patankar_matrix`] assembles all of them.

use crate::error::{Error, Result};
use crate::linalg::{zmatrix_solve, SquareMatrix};
use crate::pdrs::{check_positive, lift_underflow, PdrsSystem, Rates};
use crate::scheme::{Derived, MpScheme, SchemeKind};

/// `a^(1 - theta) * b^theta` for positive `a`, `b`, evaluated in log space.
pub(crate) fn geometric_blend(a: f64, b: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return a;
    }
    if theta == 1.0 {
        return b;
    }
    let (la, lb) = (a.max(f64::MIN_POSITIVE).ln(), b.max(f64::MIN_POSITIVE).ln());
    ((1.0 - theta) * la + theta * lb).exp()
}

/// `ln(b / a)` for positive `a`, `b`.
pub(crate) fn log_ratio(a: f64, b: f64) -> f64 {
    b.max(f64::MIN_POSITIVE).ln() - a.max(f64::MIN_POSITIVE).ln()
}

/// `I + h * sum_j w_j (diag(loss_j) - P_j) diag(1 / den)`.
pub(crate) fn patankar_matrix(terms: &[(f64, &Rates)], h: f64, den: &[f64]) -> SquareMatrix {
    let d = den.len();
    let mut m = SquareMatrix::identity(d);
    for &(w, rates) in terms {
        if w == 0.0 {
            continue;
        }
        let hw = h * w;
        for &(k, nu, p) in &rates.prod {
            m[(k, nu)] -= hw * p / den[nu];
        }
        for (k, l) in rates.loss.iter().enumerate() {
            m[(k, k)] += hw * l / den[k];
        }
    }
    m
}

/// Column sums of [`patankar_matrix`], `1 + h * sum_j w_j imbalance_j / den`,
/// computed from the rates rather than from the assembled entries.
pub(crate) fn patankar_excess(terms: &[(f64, &Rates)], h: f64, den: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0; den.len()];
    for &(w, rates) in terms {
        if w == 0.0 {
            continue;
        }
        for ((e, b), dk) in e.iter_mut().zip(&rates.imbalance).zip(den) {
            *e += h * w * b / dk;
        }
    }
    e
}

/// Solves the Patankar system for `terms`, `h`, `den`.
pub(crate) fn patankar_solve(terms: &[(f64, &Rates)], h: f64, den: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    zmatrix_solve(&patankar_matrix(terms, h, den), &patankar_excess(terms, h, den), rhs)
}

/// `base + h * sum_j w_j r^P_j` over the positive block.
pub(crate) fn patankar_rhs(base: &[f64], terms: &[(f64, &Rates)], h: f64) -> Vec<f64> {
    let mut rhs = base.to_vec();
    for &(w, rates) in terms {
        if w == 0.0 {
            continue;
        }
        for (r, rp) in rhs.iter_mut().zip(&rates.rest_prod) {
            *r += h * w * rp;
        }
    }
    rhs
}

/// Explicit block: `base + h * sum_j w_j g_j`.
fn explicit_combo(base: &[f64], terms: &[(f64, &Rates)], h: f64) -> Vec<f64> {
    let mut out = base.to_vec();
    for &(w, rates) in terms {
        for (o, g) in out.iter_mut().zip(&rates.explicit) {
            *o += h * w * g;
        }
    }
    out
}

fn solve_positive(terms: &[(f64, &Rates)], h: f64, den: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = patankar_solve(terms, h, den, rhs)?;
    lift_underflow(&mut x);
    check_positive(&x, x.len())?;
    Ok(x)
}

/// Result of one accepted base step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t_n: f64,
    pub dt: f64,
    /// Full state at `t_n`.
    pub u_n: Vec<f64>,
    /// Stage states (full vectors), `stages[0] == u_n`.
    pub stages: Vec<Vec<f64>>,
    pub stage_times: Vec<f64>,
    /// Rates evaluated at every stage.
    pub stage_rates: Vec<Rates>,
    /// Update Patankar-weight denominators (positive block).
    pub sigma: Vec<f64>,
    /// Full state at `t_n + dt`.
    pub u_next: Vec<f64>,
    /// `sum_j b_j r^P(u^(j))`.
    pub rest_sum: Vec<f64>,
    /// Per-stage weights of the update matrix (`b` for MPRK, `beta20, beta21`
    /// for MPSSPRK2).
    pub update_weights: Vec<f64>,
    /// `g` in the update right-hand side `u^n + gamma * g` (positive block).
    pub update_offset: Vec<f64>,
}

impl StepRecord {
    /// Number of positive components.
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// `u_next - u_n` over the explicit block.
    pub fn explicit_increment(&self) -> Vec<f64> {
        let d = self.dim();
        self.u_next[d..].iter().zip(&self.u_n[d..]).map(|(a, b)| a - b).collect()
    }

    pub(crate) fn update_terms(&self) -> Vec<(f64, &Rates)> {
        self.update_weights.iter().copied().zip(&self.stage_rates).collect()
    }
}

/// Update matrix `M` of an MP scheme for given stages and denominators.
///
/// Rates are re-evaluated at the stage states (times `t_n + c_j dt`).
pub fn assemble_update_matrix<S: PdrsSystem + ?Sized>(
    sys: &S,
    scheme: &MpScheme,
    stages: &[Vec<f64>],
    sigma: &[f64],
    t_n: f64,
    dt: f64,
) -> Result<SquareMatrix> {
    check_positive(sigma, sigma.len())?;
    let rates =
        stages.iter().zip(&scheme.c).map(|(u, c)| Rates::evaluate(sys, t_n + c * dt, u)).collect::<Result<Vec<_>>>()?;
    let weights = update_weights(scheme);
    let terms: Vec<_> = weights.iter().copied().zip(&rates).collect();
    Ok(patankar_matrix(&terms, dt, sigma))
}

fn update_weights(scheme: &MpScheme) -> Vec<f64> {
    match scheme.derived {
        Derived::Mpssprk2 { beta20, beta21, .. } => vec![beta20, beta21],
        _ => scheme.b.clone(),
    }
}

/// Performs one step of `scheme` from `(t_n, u_n)` with step size `dt`.
pub fn step<S: PdrsSystem + ?Sized>(sys: &S, scheme: &MpScheme, t_n: f64, u_n: &[f64], dt: f64) -> Result<StepRecord> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")));
    }
    let d = sys.dim();
    let expected = d + sys.explicit_dim();
    if u_n.len() != expected {
        return Err(Error::Dimension { expected, found: u_n.len() });
    }
    check_positive(u_n, d)?;
    match scheme.kind {
        SchemeKind::Mprk22 | SchemeKind::Mprk43I => step_mprk(sys, scheme, t_n, u_n, dt),
        SchemeKind::Mpssprk2 => step_mpssprk2(sys, scheme, t_n, u_n, dt),
    }
}

fn step_mprk<S: PdrsSystem + ?Sized>(sys: &S, scheme: &MpScheme, t_n: f64, u_n: &[f64], dt: f64) -> Result<StepRecord> {
    let d = sys.dim();
    let s = scheme.stages();
    let un_pos = &u_n[..d];
    let mut stages = vec![u_n.to_vec()];
    let mut stage_times = vec![t_n];
    let mut stage_rates = vec![Rates::evaluate(sys, t_n, u_n)?];

    for i in 1..s {
        let den: Vec<f64> = match (scheme.derived, i) {
            (_, 1) => un_pos.to_vec(),
            (Derived::Mprk43I { p, .. }, 2) => {
                un_pos.iter().zip(&stages[1][..d]).map(|(&a, &b)| geometric_blend(a, b, 1.0 / p)).collect()
            }
            _ => unreachable!("MPRK schemes have at most three stages"),
        };
        let terms: Vec<_> = scheme.a[i].iter().copied().zip(&stage_rates).collect();
        let mut ui = solve_positive(&terms, dt, &den, &patankar_rhs(un_pos, &terms, dt))?;
        ui.extend(explicit_combo(&u_n[d..], &terms, dt));
        let ti = t_n + scheme.c[i] * dt;
        stage_rates.push(Rates::evaluate(sys, ti, &ui)?);
        stages.push(ui);
        stage_times.push(ti);
    }

    let u2 = &stages[1][..d];
    let sigma: Vec<f64> = match scheme.derived {
        Derived::Mprk22 => {
            let e = 1.0 / scheme.alpha;
            un_pos.iter().zip(u2).map(|(&a, &b)| geometric_blend(a, b, e)).collect()
        }
        Derived::Mprk43I { beta1, beta2, .. } => {
            let e = 1.0 / scheme.a[1][0];
            let den: Vec<f64> = un_pos.iter().zip(u2).map(|(&a, &b)| geometric_blend(a, b, e)).collect();
            let terms = [(beta1, &stage_rates[0]), (beta2, &stage_rates[1])];
            solve_positive(&terms, dt, &den, &patankar_rhs(un_pos, &terms, dt))?
        }
        Derived::Mpssprk2 { .. } => unreachable!(),
    };

    let weights = scheme.b.clone();
    let terms: Vec<_> = weights.iter().copied().zip(&stage_rates).collect();
    let mut u_next = solve_positive(&terms, dt, &sigma, &patankar_rhs(un_pos, &terms, dt))?;
    u_next.extend(explicit_combo(&u_n[d..], &terms, dt));

    let mut rest_sum = vec![0.0; d];
    for &(w, r) in &terms {
        for (acc, rp) in rest_sum.iter_mut().zip(&r.rest_prod) {
            *acc += w * rp;
        }
    }
    let update_offset = rest_sum.iter().map(|v| dt * v).collect();
    Ok(StepRecord {
        t_n,
        dt,
        u_n: u_n.to_vec(),
        stages,
        stage_times,
        stage_rates,
        sigma,
        u_next,
        rest_sum,
        update_weights: weights,
        update_offset,
    })
}

fn step_mpssprk2<S: PdrsSystem + ?Sized>(
    sys: &S,
    scheme: &MpScheme,
    t_n: f64,
    u_n: &[f64],
    dt: f64,
) -> Result<StepRecord> {
    if sys.has_rest_terms() {
        return Err(Error::Unsupported(
            "MPSSPRK2 is implemented for conservative production-destruction systems only".into(),
        ));
    }
    let Derived::Mpssprk2 { beta20, beta21, s } = scheme.derived else { unreachable!() };
    let (alpha, beta) = (scheme.alpha, scheme.beta);
    let d = sys.dim();
    let un_pos = &u_n[..d];
    let r1 = Rates::evaluate(sys, t_n, u_n)?;

    let terms = [(beta, &r1)];
    let mut u2 = solve_positive(&terms, dt, un_pos, un_pos)?;
    u2.extend(explicit_combo(&u_n[d..], &terms, dt));
    let t2 = t_n + beta * dt;
    let r2 = Rates::evaluate(sys, t2, &u2)?;

    let sigma: Vec<f64> = un_pos.iter().zip(&u2[..d]).map(|(&a, &b)| geometric_blend(a, b, s)).collect();
    let base: Vec<f64> = un_pos.iter().zip(&u2[..d]).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect();
    let terms = [(beta20, &r1), (beta21, &r2)];
    let mut u_next = solve_positive(&terms, dt, &sigma, &base)?;
    let exp_base: Vec<f64> = u_n[d..].iter().zip(&u2[d..]).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect();
    u_next.extend(explicit_combo(&exp_base, &terms, dt));

    let update_offset = un_pos.iter().zip(&u2[..d]).map(|(a, b)| alpha * (b - a)).collect();
    Ok(StepRecord {
        t_n,
        dt,
        u_n: u_n.to_vec(),
        stages: vec![u_n.to_vec(), u2],
        stage_times: vec![t_n, t2],
        stage_rates: vec![r1, r2],
        sigma,
        u_next,
        rest_sum: vec![0.0; d],
        update_weights: vec![beta20, beta21],
        update_offset,
    })
}
