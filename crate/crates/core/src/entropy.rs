//! Nonlinear functionals enforced by relaxation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Whether the exact flow keeps the functional constant or lets it decrease.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Conservative,
    Dissipative,
}

/// A scalar functional `eta(u)` with its gradient.
#[derive(Clone)]
pub struct EntropyFunctional {
    pub name: String,
    eval: EvalFn,
    grad: GradFn,
    pub regime: Regime,
    /// Non-decreasing in every argument.
    pub monotone_nondecreasing: bool,
    pub convex: bool,
}

impl fmt::Debug for EntropyFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropyFunctional")
            .field("name", &self.name)
            .field("regime", &self.regime)
            .field("monotone_nondecreasing", &self.monotone_nondecreasing)
            .field("convex", &self.convex)
            .finish()
    }
}

impl EntropyFunctional {
    pub fn new(
        name: impl Into<String>,
        regime: Regime,
        eval: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            regime,
            monotone_nondecreasing: false,
            convex: false,
        }
    }

    pub fn with_flags(mut self, monotone_nondecreasing: bool, convex: bool) -> Self {
        self.monotone_nondecreasing = monotone_nondecreasing;
        self.convex = convex;
        self
    }

    /// `w^T u`: conserved or dissipated linear functional.
    pub fn linear(name: impl Into<String>, regime: Regime, weights: Vec<f64>) -> Self {
        let monotone = weights.iter().all(|&w| w >= 0.0);
        let w = Arc::new(weights);
        let w2 = Arc::clone(&w);
        Self::new(
            name,
            regime,
            move |u| Ok(w.iter().zip(u).map(|(a, b)| a * b).sum()),
            move |u| {
                let mut g = w2.to_vec();
                g.resize(u.len(), 0.0);
                Ok(g)
            },
        )
        .with_flags(monotone, true)
    }

    /// `scale / 2 * sum_k u_k^2`.
    pub fn quadratic(name: impl Into<String>, regime: Regime, scale: f64) -> Self {
        Self::new(
            name,
            regime,
            move |u| Ok(0.5 * scale * u.iter().map(|v| v * v).sum::<f64>()),
            move |u| Ok(u.iter().map(|v| scale * v).collect()),
        )
        .with_flags(false, scale >= 0.0)
    }

    /// `eta(u)`; fails with a domain error if the value is not finite.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        let v = (self.eval)(u)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("{} evaluated to {v}", self.name)))
        }
    }

    pub fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = (self.grad)(u)?;
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::Domain(format!("gradient of {} is not finite", self.name)))
        }
    }
}

/// Domain error unless every entry of `u[..n]` is strictly positive.
pub fn require_positive(u: &[f64], n: usize, what: &str) -> Result<()> {
    match u[..n].iter().position(|&v| !(v > 0.0)) {
        Some(i) => Err(Error::Domain(format!("{what} needs positive arguments, component {i} is {:e}", u[i]))),
        None => Ok(()),
    }
}
