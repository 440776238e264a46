use std::fmt::Write as _;

use relax_mprk_core::{
    build_problem, integrate, Adaptivity, MpScheme, Params, RelaxMode, SchemeKind, SigmaMode, Solver, Trajectory,
    PROBLEMS,
};

use crate::config::{default_parameters, RunArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, num, Sink};
use crate::reference;

pub const SIGMA_MODES: [SigmaMode; 3] = [SigmaMode::Frozen, SigmaMode::Dense, SigmaMode::Bootstrap];

/// `kind:alpha[,beta]` as accepted by `--method`.
pub fn method_spec(s: &MpScheme) -> String {
    match s.kind {
        SchemeKind::Mprk22 => format!("{}:{}", s.kind.name(), s.alpha),
        _ => format!("{}:{},{}", s.kind.name(), s.alpha, s.beta),
    }
}

fn integrate_run(cfg: &RunConfig) -> CliResult<Trajectory> {
    let p = &cfg.problem;
    Ok(integrate(&*p.sys, &cfg.scheme, p.entropy(), &cfg.integrate, p.tspan.0, &p.u0, cfg.t_end)?)
}

pub fn run(args: RunArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args)?;
    let traj = integrate_run(&cfg)?;
    let times: Vec<f64> = std::iter::once(traj.t0).chain(traj.steps.iter().map(|s| s.t)).collect();
    let reference = reference::states_at(&cfg, &times, cfg.integrate.dt0)?;

    let mut sink = Sink::open(cfg.out.as_deref())?;
    output::write_run(&mut sink, &cfg, &traj, reference.as_deref())?;
    sink.finish()?;
    if cfg.dump_state {
        output::write_states(&output::state_path(cfg.out.as_deref()), &traj)?;
    }
    if let Some(out) = &cfg.out {
        let mut meta = cfg.metadata();
        meta.extend([
            ("steps".to_string(), traj.steps.len().to_string()),
            ("rejected_error".to_string(), traj.rejected_error.to_string()),
            ("rejected_relax".to_string(), traj.rejected_relax.to_string()),
            ("t_final".to_string(), num(traj.final_time())),
            ("reference".to_string(), reference_name(&cfg).to_string()),
        ]);
        output::write_meta(&output::meta_path(out), &meta)?;
    }
    Ok(())
}

fn reference_name(cfg: &RunConfig) -> &'static str {
    match (&cfg.problem.reference, cfg.oracle) {
        (relax_mprk_core::Reference::Exact(_), _) => "exact",
        (_, true) => "oracle",
        _ => "none",
    }
}

/// One rung of a convergence ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub dt: f64,
    pub error: f64,
    pub order: Option<f64>,
    pub gamma_dev: f64,
}

/// Fixed-step runs at `dt0 / 2^i`, `i < levels`, evaluated concurrently and
/// reported in order of decreasing `dt`.
pub fn convergence_table(cfg: &RunConfig, levels: usize) -> CliResult<Vec<Rung>> {
    if levels == 0 {
        return Err(CliError::Config("--levels must be at least 1".into()));
    }
    if !reference::available(cfg) {
        return Err(reference::missing(cfg));
    }
    let dts: Vec<f64> = (0..levels).map(|i| cfg.integrate.dt0 / 2f64.powi(i as i32)).collect();
    let runs: Vec<CliResult<Trajectory>> = std::thread::scope(|s| {
        let handles: Vec<_> = dts
            .iter()
            .map(|&dt| {
                let mut c = cfg.clone();
                c.integrate.dt0 = dt;
                c.integrate.adaptivity = Adaptivity::Fixed;
                s.spawn(move || integrate_run(&c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ladder thread panicked")).collect()
    });
    let runs = runs.into_iter().collect::<CliResult<Vec<_>>>()?;

    // relaxed runs end near, not exactly at, t_end; query the reference at each final time
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| runs[a].final_time().total_cmp(&runs[b].final_time()));
    let times: Vec<f64> = order.iter().map(|&i| runs[i].final_time()).collect();
    let finest = dts[levels - 1];
    let states = reference::states_at(cfg, &times, finest)?.ok_or_else(|| reference::missing(cfg))?;
    let mut errors = vec![0.0; runs.len()];
    for (slot, &i) in order.iter().enumerate() {
        errors[i] = reference::max_error(runs[i].final_state(), &states[slot]);
    }

    Ok((0..levels)
        .map(|i| Rung {
            dt: dts[i],
            error: errors[i],
            order: (i > 0).then(|| (errors[i - 1] / errors[i]).log2() / (dts[i - 1] / dts[i]).log2()),
            gamma_dev: runs[i].max_gamma_deviation(),
        })
        .collect())
}

pub fn convergence(args: RunArgs, levels: usize) -> CliResult<()> {
    let cfg = RunConfig::resolve(args)?;
    let table = convergence_table(&cfg, levels)?;
    let mut sink = Sink::open(cfg.out.as_deref())?;
    sink.line(output::CONVERGENCE_HEADER)?;
    for r in &table {
        let order = r.order.map(num).unwrap_or_default();
        sink.line(&format!("{},{},{order},{}", num(r.dt), num(r.error), num(r.gamma_dev)))?;
    }
    sink.finish()?;
    if let Some(out) = &cfg.out {
        let mut meta = cfg.metadata();
        meta.push(("levels".into(), levels.to_string()));
        output::write_meta(&output::meta_path(out), &meta)?;
    }
    Ok(())
}

/// Registry printout. Every name shown is accepted by `run`.
pub fn list_text() -> CliResult<String> {
    let mut s = String::new();
    let w = |s: &mut String, line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    w(&mut s, "problems:".into());
    for (name, desc) in PROBLEMS {
        let p = build_problem(name, &Params::default()).map_err(|e| CliError::Config(e.to_string()))?;
        let d = &p.defaults;
        let params: Vec<String> = p.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        w(&mut s, format!("  {name}  {desc}"));
        let mut line = String::new();
        let _ = write!(
            line,
            "    defaults: method={} relax={} solver={} sigma_mode={} adapt={} dt0={} t0={} t_end={}",
            method_spec(&d.scheme),
            d.relax,
            d.solver,
            d.sigma_mode,
            d.integrate_config(d.relax).adaptivity,
            d.dt0,
            p.tspan.0,
            p.tspan.1
        );
        if !params.is_empty() {
            let _ = write!(line, " params={}", params.join(","));
        }
        w(&mut s, line);
    }
    w(&mut s, "methods:".into());
    for kind in SchemeKind::ALL {
        let (a, b) = default_parameters(kind);
        let example = relax_mprk_core::build_scheme(kind, a, b)?;
        let form = if kind == SchemeKind::Mprk22 { "alpha" } else { "alpha,beta" };
        w(&mut s, format!("  {}  {}:{form}  default {}", kind.name(), kind.name(), method_spec(&example)));
    }
    let names = |v: Vec<&str>| v.join(" ");
    w(&mut s, format!("relax: {}", names(RelaxMode::ALL.iter().map(|m| m.name()).collect())));
    w(&mut s, format!("solvers: {}", names(Solver::ALL.iter().map(|m| m.name()).collect())));
    w(&mut s, format!("sigma_modes: {}", names(SIGMA_MODES.iter().map(|m| m.name()).collect())));
    w(&mut s, format!("adapt: {}", names(Adaptivity::ALL.iter().map(|m| m.name()).collect())));
    Ok(s)
}

pub fn list() -> CliResult<()> {
    let mut sink = Sink::open(None)?;
    for line in list_text()?.lines() {
        sink.line(line)?;
    }
    sink.finish()
}
