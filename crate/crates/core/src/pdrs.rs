//! Production–destruction–rest systems.
//!
//! A PDRS right-hand side is written componentwise as
//!
//! ```text
//! f_k = r^P_k - r^D_k + sum_nu (p_{k nu} - d_{k nu}),   k = 0..d
//! ```
//!
//! with every rate non-negative on the positive orthant and `p_kk = d_kk = 0`.
//! Systems may additionally carry an explicit block of `explicit_dim()`
//! unsigned components appended after the `dim()` positive ones; those are
//! advanced by the underlying explicit Runge–Kutta method and are never
//! subject to positivity checks.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// Rate callbacks of a production–destruction–rest system.
///
/// `u` always holds the full state (`dim() + explicit_dim()` entries).
pub trait PdrsSystem: Send + Sync {
    /// Number of positive (Patankar-treated) components.
    fn dim(&self) -> usize;

    /// Number of trailing components advanced explicitly.
    fn explicit_dim(&self) -> usize {
        0
    }

    /// Production rate `p_{k nu}`: gain of component `k` from `nu`.
    fn production(&self, k: usize, nu: usize, t: f64, u: &[f64]) -> f64;

    /// Destruction rate `d_{k nu}`: loss of component `k` towards `nu`.
    ///
    /// Defaults to `p_{nu k}`. Overrides must keep the nonzero pattern equal
    /// to the transposed production pattern.
    fn destruction(&self, k: usize, nu: usize, t: f64, u: &[f64]) -> f64 {
        self.production(nu, k, t, u)
    }

    /// Whether `d_{k nu} = p_{nu k}` holds, so destruction need not be
    /// evaluated separately.
    fn pd_transposed(&self) -> bool {
        true
    }

    fn rest_production(&self, _k: usize, _t: f64, _u: &[f64]) -> f64 {
        0.0
    }

    fn rest_destruction(&self, _k: usize, _t: f64, _u: &[f64]) -> f64 {
        0.0
    }

    /// Whether `rest_production`/`rest_destruction` can be nonzero.
    fn has_rest_terms(&self) -> bool {
        false
    }

    /// Pairs `(k, nu)`, `k != nu`, for which `p_{k nu}` may be nonzero.
    /// `None` means every off-diagonal pair is visited.
    fn sparsity(&self) -> Option<&[(usize, usize)]> {
        None
    }

    /// Weight vectors `n` with `n^T f = 0` (over the positive block).
    fn linear_invariants(&self) -> &[Vec<f64>] {
        &[]
    }

    /// Conservative PDS: `p_{k nu} = d_{nu k}` and no rest terms.
    fn is_conservative(&self) -> bool {
        self.pd_transposed() && !self.has_rest_terms()
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    /// Right-hand side of the explicit block.
    fn explicit_rhs(&self, _t: f64, _u: &[f64], _out: &mut [f64]) {}
}

/// Fails with [`Error::NonPositive`] on the first non-positive entry among
/// the first `dim` components.
pub fn check_positive(u: &[f64], dim: usize) -> Result<()> {
    match u[..dim].iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(index) => Err(Error::NonPositive { index, value: u[index] }),
        None => Ok(()),
    }
}

/// Replaces zeros and subnormals left by floating-point underflow with the
/// smallest positive normal number, so that a decayed species stays a valid
/// Patankar-weight denominator. Genuinely negative values are left alone.
pub(crate) fn lift_underflow(u: &mut [f64]) {
    for v in u.iter_mut() {
        if v.abs() < f64::MIN_POSITIVE {
            *v = f64::MIN_POSITIVE;
        }
    }
}

fn check_len<S: PdrsSystem + ?Sized>(sys: &S, u: &[f64]) -> Result<()> {
    let expected = sys.dim() + sys.explicit_dim();
    if u.len() != expected {
        return Err(Error::Dimension { expected, found: u.len() });
    }
    Ok(())
}

fn checked_rate(value: f64, what: &str, k: usize, nu: usize) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what}({k}, {nu}) = {value:e} is not a non-negative finite rate")))
    }
}

/// All rates of a system evaluated at one `(t, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    /// Nonzero production entries `(k, nu, p_{k nu})`.
    pub prod: Vec<(usize, usize, f64)>,
    /// Total loss `r^D_k + sum_nu d_{k nu}`.
    pub loss: Vec<f64>,
    /// `loss_k - sum_nu p_{nu k}`, accumulated without cancellation against
    /// the production terms when `d = p^T`.
    pub imbalance: Vec<f64>,
    pub rest_prod: Vec<f64>,
    pub rest_dest: Vec<f64>,
    /// Right-hand side of the explicit block.
    pub explicit: Vec<f64>,
}

impl Rates {
    pub fn evaluate<S: PdrsSystem + ?Sized>(sys: &S, t: f64, u: &[f64]) -> Result<Self> {
        check_len(sys, u)?;
        let d = sys.dim();
        check_positive(u, d)?;
        let mut prod = Vec::new();
        let mut loss = vec![0.0; d];
        let mut imbalance = vec![0.0; d];
        let transposed = sys.pd_transposed();
        let mut visit = |k: usize, nu: usize| -> Result<()> {
            if k == nu {
                return Ok(());
            }
            let p = checked_rate(sys.production(k, nu, t, u), "p", k, nu)?;
            let dv = if transposed { p } else { checked_rate(sys.destruction(nu, k, t, u), "d", nu, k)? };
            if p != 0.0 {
                prod.push((k, nu, p));
            }
            loss[nu] += dv;
            if !transposed {
                imbalance[nu] += dv - p;
            }
            Ok(())
        };
        match sys.sparsity() {
            Some(pattern) => {
                for &(k, nu) in pattern {
                    visit(k, nu)?;
                }
            }
            None => {
                for k in 0..d {
                    for nu in 0..d {
                        visit(k, nu)?;
                    }
                }
            }
        }
        let (mut rest_prod, mut rest_dest) = (vec![0.0; d], vec![0.0; d]);
        if sys.has_rest_terms() {
            for k in 0..d {
                rest_prod[k] = checked_rate(sys.rest_production(k, t, u), "r^P", k, k)?;
                rest_dest[k] = checked_rate(sys.rest_destruction(k, t, u), "r^D", k, k)?;
                loss[k] += rest_dest[k];
                imbalance[k] += rest_dest[k];
            }
        }
        let mut explicit = vec![0.0; sys.explicit_dim()];
        if !explicit.is_empty() {
            sys.explicit_rhs(t, u, &mut explicit);
            if explicit.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("non-finite explicit right-hand side".into()));
            }
        }
        Ok(Self { prod, loss, imbalance, rest_prod, rest_dest, explicit })
    }

    /// Number of positive components.
    pub fn dim(&self) -> usize {
        self.loss.len()
    }

    pub fn has_nonzero_rest(&self) -> bool {
        self.rest_prod.iter().chain(&self.rest_dest).any(|&v| v != 0.0)
    }

    /// Assembled right-hand side (positive block followed by explicit block).
    pub fn rhs(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.rest_prod.iter().zip(&self.loss).map(|(rp, l)| rp - l).collect();
        for &(k, _, p) in &self.prod {
            f[k] += p;
        }
        f.extend_from_slice(&self.explicit);
        f
    }
}

/// Evaluates `f(t, u)` for the full state.
pub fn eval_rhs<S: PdrsSystem + ?Sized>(sys: &S, t: f64, u: &[f64]) -> Result<Vec<f64>> {
    Ok(Rates::evaluate(sys, t, u)?.rhs())
}

/// The additive splitting of the positive block into `d + 1` addends.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRhs {
    /// Column `nu` holds addend `f^{[nu]}`: off-diagonal entries `p_{k nu}`,
    /// diagonal entry `-(r^D_nu + sum_mu d_{nu mu})`.
    pub addends: SquareMatrix,
    /// The rest-production addend `f^{[d]} = r^P`.
    pub rest: Vec<f64>,
}

impl SplitRhs {
    /// Sum of all addends; equals the positive block of [`eval_rhs`].
    pub fn total(&self) -> Vec<f64> {
        let n = self.addends.dim();
        (0..n).map(|k| self.addends.row(k).iter().sum::<f64>() + self.rest[k]).collect()
    }
}

pub fn split_rhs<S: PdrsSystem + ?Sized>(sys: &S, t: f64, u: &[f64]) -> Result<SplitRhs> {
    let rates = Rates::evaluate(sys, t, u)?;
    let d = rates.dim();
    let mut addends = SquareMatrix::zeros(d);
    for &(k, nu, p) in &rates.prod {
        addends[(k, nu)] += p;
    }
    for (nu, l) in rates.loss.iter().enumerate() {
        addends[(nu, nu)] = -l;
    }
    Ok(SplitRhs { addends, rest: rates.rest_prod })
}

/// `n^T u_after` agrees with `n^T u_before` to relative tolerance `rtol`.
pub fn check_linear_invariant(n: &[f64], u_before: &[f64], u_after: &[f64], rtol: f64) -> bool {
    let dot = |u: &[f64]| n.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    let (before, after) = (dot(u_before), dot(u_after));
    (after - before).abs() <= rtol * before.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// p_{21} = u_1 = d_{12}.
    struct Exchange;
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

    struct Lv;
    impl PdrsSystem for Lv {
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
        fn has_rest_terms(&self) -> bool {
            true
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
    }

    struct Empty;
    impl PdrsSystem for Empty {
        fn dim(&self) -> usize {
            3
        }
        fn production(&self, _: usize, _: usize, _: f64, _: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn lotka_volterra_rhs() {
        assert_eq!(eval_rhs(&Lv, 0.0, &[2.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn empty_system_has_zero_rhs() {
        assert_eq!(eval_rhs(&Empty, 0.0, &[0.3, 2.0, 9.0]).unwrap(), vec![0.0; 3]);
        let split = split_rhs(&Empty, 0.0, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(split.addends, SquareMatrix::zeros(3));
        assert_eq!(split.rest, vec![0.0; 3]);
    }

    #[test]
    fn exchange_rhs_and_split() {
        assert_eq!(eval_rhs(&Exchange, 0.0, &[1.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        let split = split_rhs(&Exchange, 0.0, &[1.0, 1.0]).unwrap();
        // column 0 is f^[1] = (-1, 1), column 1 is f^[2] = 0
        assert_eq!(split.addends.row(0), &[-1.0, 0.0]);
        assert_eq!(split.addends.row(1), &[1.0, 0.0]);
        assert_eq!(split.rest, vec![0.0, 0.0]);
    }

    #[test]
    fn lotka_volterra_split() {
        let split = split_rhs(&Lv, 0.0, &[2.0, 2.0]).unwrap();
        assert_eq!(split.rest, vec![4.0, 0.0]);
        assert_eq!(split.addends[(1, 1)], -2.0);
        assert_eq!(split.total(), vec![0.0, 2.0]);
    }

    #[test]
    fn non_positive_input_names_index() {
        assert_eq!(eval_rhs(&Exchange, 0.0, &[1.0, 0.0]), Err(Error::NonPositive { index: 1, value: 0.0 }));
        assert!(matches!(eval_rhs(&Exchange, 0.0, &[-1.0, 1.0]), Err(Error::NonPositive { index: 0, .. })));
    }

    #[test]
    fn linear_invariant_check() {
        assert!(check_linear_invariant(&[1.0, 1.0], &[1.0, 1.0], &[0.4, 1.6], 1e-12));
        assert!(check_linear_invariant(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], 1e-12));
        assert!(!check_linear_invariant(&[0.0, 1.0], &[1.0, 1.0], &[0.4, 1.6], 1e-12));
    }
}
