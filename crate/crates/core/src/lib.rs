//! Relaxation modified Patankar Runge–Kutta integrators for positive
//! production–destruction–rest systems.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod entropy;
pub mod error;
pub mod gamma;
pub mod linalg;
pub mod pdrs;
pub mod problems;
pub mod relax;
pub mod roots;
pub mod scheme;
pub mod stepper;

pub use control::{error_estimate, integrate, AcceptedStep, Adaptivity, ControllerState, IntegrateConfig, Trajectory};
pub use entropy::{EntropyFunctional, Regime};
pub use error::{Error, Result};
pub use gamma::{gamma_update, gamma_update_derivative, sigma_bar, GammaSolve, SigmaMode};
pub use linalg::{lu_solve, zmatrix_solve, SquareMatrix};
pub use pdrs::{check_positive, eval_rhs, split_rhs, PdrsSystem, Rates, SplitRhs};
pub use problems::{build_problem, Defaults, Mesh, Oracle, Params, ProblemDescriptor, Reference, PROBLEMS};
pub use relax::{
    entropy_estimate, relax_step, residual_classical, residual_geometric, residual_implicit, RelaxConfig, RelaxMode,
    RelaxOutcome, RelaxStatus,
};
pub use roots::{solve_scalar, RootResult, RootSettings, Solver};
pub use scheme::{build_scheme, Derived, MpScheme, SchemeKind};
pub use stepper::{assemble_update_matrix, step, StepRecord};
