//! Scheme identities, Butcher coefficients and derived constants.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Second-order family MPRK22(alpha).
    Mprk22,
    /// Third-order family MPRK43I(alpha, beta) with implicitly defined sigma.
    Mprk43I,
    /// Second-order SSP family MPSSPRK2(alpha, beta).
    Mpssprk2,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Mprk22, SchemeKind::Mprk43I, SchemeKind::Mpssprk2];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Mprk22 => "mprk22",
            SchemeKind::Mprk43I => "mprk43i",
            SchemeKind::Mpssprk2 => "mpssprk2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Scheme-specific constants beyond the Butcher array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derived {
    Mprk22,
    /// Weights of the sigma system and the exponent of the third-stage PWD.
    Mprk43I {
        beta1: f64,
        beta2: f64,
        p: f64,
    },
    /// Shu–Osher weights of the update and the exponent of sigma.
    Mpssprk2 {
        beta20: f64,
        beta21: f64,
        s: f64,
    },
}

/// A validated modified Patankar scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MpScheme {
    pub kind: SchemeKind,
    pub alpha: f64,
    pub beta: f64,
    /// Strictly lower-triangular coefficient matrix, `a[i][j]` for `j < i`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub derived: Derived,
    pub order: usize,
}

impl MpScheme {
    pub fn mprk22(alpha: f64) -> Result<Self> {
        build_scheme(SchemeKind::Mprk22, alpha, f64::NAN)
    }

    pub fn mprk43i(alpha: f64, beta: f64) -> Result<Self> {
        build_scheme(SchemeKind::Mprk43I, alpha, beta)
    }

    pub fn mpssprk2(alpha: f64, beta: f64) -> Result<Self> {
        build_scheme(SchemeKind::Mpssprk2, alpha, beta)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

impl fmt::Display for MpScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SchemeKind::Mprk22 => write!(f, "MPRK22({})", self.alpha),
            SchemeKind::Mprk43I => write!(f, "MPRK43I({},{})", self.alpha, self.beta),
            SchemeKind::Mpssprk2 => write!(f, "MPSSPRK2({},{})", self.alpha, self.beta),
        }
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("violated: {what}")))
    }
}

/// Builds and validates a scheme. `beta` is ignored for MPRK22.
pub fn build_scheme(kind: SchemeKind, alpha: f64, beta: f64) -> Result<MpScheme> {
    require(alpha.is_finite(), "alpha finite")?;
    match kind {
        SchemeKind::Mprk22 => {
            require(alpha >= 0.5, "alpha >= 1/2")?;
            let b2 = 1.0 / (2.0 * alpha);
            Ok(MpScheme {
                kind,
                alpha,
                beta: f64::NAN,
                a: vec![vec![], vec![alpha]],
                b: vec![1.0 - b2, b2],
                c: vec![0.0, alpha],
                derived: Derived::Mprk22,
                order: 2,
            })
        }
        SchemeKind::Mprk43I => {
            require(beta.is_finite(), "beta finite")?;
            require(alpha != 0.0, "alpha != 0")?;
            require(beta != 0.0, "beta != 0")?;
            require(alpha != 2.0 / 3.0, "alpha != 2/3")?;
            require(beta != alpha, "beta != alpha")?;
            let den = alpha * (2.0 - 3.0 * alpha);
            let a21 = alpha;
            let a31 = (3.0 * alpha * beta * (1.0 - alpha) - beta * beta) / den;
            let a32 = beta * (beta - alpha) / den;
            let b1 = 1.0 + (2.0 - 3.0 * (alpha + beta)) / (6.0 * alpha * beta);
            let b2 = (3.0 * beta - 2.0) / (6.0 * alpha * (beta - alpha));
            let b3 = (2.0 - 3.0 * alpha) / (6.0 * beta * (beta - alpha));
            // MP weights need a non-negative Butcher array
            require(a21 > 0.0, "a21 = alpha > 0")?;
            require(a31 >= 0.0, "a31 = (3 alpha beta (1 - alpha) - beta^2) / (alpha (2 - 3 alpha)) >= 0")?;
            require(a32 >= 0.0, "a32 = beta (beta - alpha) / (alpha (2 - 3 alpha)) >= 0")?;
            require(b1 >= 0.0, "b1 = 1 + (2 - 3 (alpha + beta)) / (6 alpha beta) >= 0")?;
            require(b2 >= 0.0, "b2 = (3 beta - 2) / (6 alpha (beta - alpha)) >= 0")?;
            require(b3 > 0.0, "b3 = (2 - 3 alpha) / (6 beta (beta - alpha)) > 0")?;
            let p = 3.0 * a21 * (a31 + a32) * b3;
            require(p > 0.0, "p = 3 a21 (a31 + a32) b3 > 0")?;
            let beta2 = 1.0 / (2.0 * a21);
            Ok(MpScheme {
                kind,
                alpha,
                beta,
                a: vec![vec![], vec![a21], vec![a31, a32]],
                b: vec![b1, b2, b3],
                c: vec![0.0, a21, a31 + a32],
                derived: Derived::Mprk43I { beta1: 1.0 - beta2, beta2, p },
                order: 3,
            })
        }
        SchemeKind::Mpssprk2 => {
            require(beta.is_finite(), "beta finite")?;
            require((0.0..=1.0).contains(&alpha), "0 <= alpha <= 1")?;
            require(beta > 0.0, "beta > 0")?;
            let lhs = alpha * beta + 1.0 / (2.0 * beta);
            require(lhs <= 1.0 + 1e-15, &format!("alpha beta + 1/(2 beta) <= 1 (got {lhs})"))?;
            require(alpha * beta != 1.0, "alpha beta != 1")?;
            let beta21 = 1.0 / (2.0 * beta);
            let beta20 = (1.0 - beta21 - alpha * beta).max(0.0);
            let s = (1.0 - alpha * beta + alpha * beta * beta) / (beta * (1.0 - alpha * beta));
            Ok(MpScheme {
                kind,
                alpha,
                beta,
                a: vec![vec![], vec![beta]],
                b: vec![alpha * beta + beta20, beta21],
                c: vec![0.0, beta],
                derived: Derived::Mpssprk2 { beta20, beta21, s },
                order: 2,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn mprk43i_reference_parameters() {
        let s = MpScheme::mprk43i(0.5, 0.75).unwrap();
        assert!(close(s.a[1][0], 0.5));
        assert!(close(s.a[2][0], 0.0));
        assert!(close(s.a[2][1], 0.75));
        assert!(close(s.b[0], 2.0 / 9.0));
        assert!(close(s.b[1], 1.0 / 3.0));
        assert!(close(s.b[2], 4.0 / 9.0));
        assert!(close(s.b.iter().sum::<f64>(), 1.0));
        let Derived::Mprk43I { beta1, beta2, p } = s.derived else { panic!() };
        assert!(close(p, 0.5));
        assert!(close(beta2, 1.0));
        assert!(close(beta1, 0.0));
        assert_eq!(s.order, 3);
    }

    #[test]
    fn mpssprk2_reference_parameters() {
        let s = MpScheme::mpssprk2(0.5, 1.0).unwrap();
        let Derived::Mpssprk2 { beta20, beta21, s: exp } = s.derived else { panic!() };
        assert_eq!(beta20, 0.0);
        assert_eq!(beta21, 0.5);
        assert!(close(exp, 2.0));
        assert!(close(s.b.iter().sum::<f64>(), 1.0));
    }

    #[test]
    fn mprk22_alpha_one() {
        let s = MpScheme::mprk22(1.0).unwrap();
        assert_eq!(s.b, vec![0.5, 0.5]);
        assert_eq!(s.c, vec![0.0, 1.0]);
    }

    #[test]
    fn parameter_domain_violations() {
        let err = MpScheme::mpssprk2(1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("alpha beta + 1/(2 beta) <= 1"), "{err}");
        assert!(MpScheme::mprk22(0.4).is_err());
        assert!(MpScheme::mprk43i(0.5, 0.9).is_err()); // a31 < 0
        assert!(MpScheme::mpssprk2(0.5, -1.0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(SchemeKind::from_name(k.name()), Some(k));
        }
    }
}
