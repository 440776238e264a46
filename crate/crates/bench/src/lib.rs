//! Benchmark fixtures for the MP steppers.

use relax_mprk_core::{build_problem, step, MpScheme, Params, ProblemDescriptor, StepRecord};

/// Periodic advection with the log entropy on `n` cells.
pub fn advection(n: usize) -> ProblemDescriptor {
    let params = Params::parse(&format!("n={n},kind=log")).expect("valid parameters");
    build_problem("advection", &params).expect("registered problem")
}

pub fn stratospheric() -> ProblemDescriptor {
    build_problem("stratospheric", &Params::default()).expect("registered problem")
}

/// The three schemes with the parameters used throughout the examples.
pub fn schemes() -> [MpScheme; 3] {
    [
        MpScheme::mprk22(1.0).expect("valid scheme"),
        MpScheme::mpssprk2(0.5, 1.0).expect("valid scheme"),
        MpScheme::mprk43i(0.5, 0.75).expect("valid scheme"),
    ]
}

/// One base step from the initial state with the problem's default step size.
pub fn first_step(p: &ProblemDescriptor, scheme: &MpScheme) -> StepRecord {
    step(&*p.sys, scheme, p.tspan.0, &p.u0, p.defaults.dt0).expect("base step succeeds")
}
