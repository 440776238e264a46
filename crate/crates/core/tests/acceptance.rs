//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the summary is always printed.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relax_mprk_core::problems::pme::barenblatt;
use relax_mprk_core::problems::ORACLE_REFINEMENT;
use relax_mprk_core::*;

use common::{loglog_slope, positive_state, sum, u_log_u, Exchange, LvPd, RandomPds};

type Outcome = std::result::Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn problem(name: &str, params: &str) -> ProblemDescriptor {
    build_problem(name, &Params::parse(params).unwrap()).unwrap()
}

fn run(p: &ProblemDescriptor, cfg: &IntegrateConfig) -> Result<Trajectory> {
    integrate(p.sys.as_ref(), &p.defaults.scheme, p.entropy(), cfg, p.tspan.0, &p.u0, p.tspan.1)
}

/// Largest `|eta(u^n) - eta(u^0)|` over a trajectory, re-evaluating eta.
fn eta_drift(eta: &EntropyFunctional, tr: &Trajectory) -> f64 {
    let e0 = eta.eval(&tr.u0).unwrap();
    tr.steps.iter().map(|s| (eta.eval(&s.u).unwrap() - e0).abs()).fold(0.0, f64::max)
}

fn sum_drift(tr: &Trajectory, d: usize) -> f64 {
    let s0 = sum(&tr.u0[..d]);
    tr.steps.iter().map(|s| (sum(&s.u[..d]) - s0).abs()).fold(0.0, f64::max) / s0.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn schemes() -> Vec<MpScheme> {
    vec![MpScheme::mprk22(1.0).unwrap(), MpScheme::mpssprk2(0.5, 1.0).unwrap(), MpScheme::mprk43i(0.5, 0.75).unwrap()]
}

fn registered() -> Vec<ProblemDescriptor> {
    vec![
        problem("lotka_volterra", ""),
        problem("stratospheric", ""),
        problem("advection", "kind=log"),
        problem("advection", "kind=sqrt"),
        problem("advection", "kind=inv"),
        problem("isothermal_euler", ""),
        problem("pme", "m=3"),
        problem("pme", "m=5"),
    ]
}

fn positivity() -> Outcome {
    let mut runs = 0;
    let mut violations = Vec::new();
    for p in registered() {
        let d = p.sys.dim();
        let eta = p.entropy().unwrap();
        let base = p.mesh.as_ref().map_or(1.0, |m| m.dx);
        for scheme in schemes() {
            for mode in RelaxMode::ALL {
                let mut cfg = p.defaults.relax_config(mode);
                if scheme.kind == SchemeKind::Mprk43I && cfg.sigma_mode == SigmaMode::Dense {
                    cfg.sigma_mode = SigmaMode::Bootstrap;
                }
                for scale in [1.0, 10.0, 100.0] {
                    let dt = base * scale;
                    let (mut t, mut u) = (p.tspan.0, p.u0.clone());
                    for _ in 0..10 {
                        let rec = match step(p.sys.as_ref(), &scheme, t, &u, dt) {
                            Ok(r) => r,
                            Err(Error::NonPositive { .. }) => {
                                violations.push(format!("{} {} {mode} dt={dt:e}: base step", p.name, scheme));
                                break;
                            }
                            Err(_) => break,
                        };
                        let mut states: Vec<&[f64]> = rec.stages.iter().map(Vec::as_slice).collect();
                        states.push(&rec.u_next);
                        let out = match relax_step(eta, &scheme, &rec, &cfg) {
                            Ok(o) if o.status != RelaxStatus::Failed => Some(o),
                            _ => None,
                        };
                        if let Some(o) = &out {
                            states.push(&o.u_relaxed);
                        }
                        if states.iter().any(|s| s[..d].iter().any(|&v| v.is_nan() || v <= 0.0)) {
                            violations.push(format!("{} {} {mode} dt={dt:e} t={t}", p.name, scheme));
                        }
                        runs += 1;
                        (t, u) = match out {
                            Some(o) => (o.t_relaxed, o.u_relaxed),
                            None => (t + dt, rec.u_next),
                        };
                    }
                }
            }
        }
    }
    check(
        violations.is_empty(),
        match violations.first() {
            None => format!("{runs} steps checked, 0 violations"),
            Some(v) => format!("{runs} steps checked, {} violations, first: {v}", violations.len()),
        },
    )
}

fn conservation(strat: &[(RelaxMode, Trajectory)]) -> Outcome {
    let mut worst = (0.0, String::new());
    let mut note = |name: String, drift: f64| {
        if drift > worst.0 || worst.1.is_empty() {
            worst = (drift, name);
        }
    };
    for mode in [RelaxMode::None, RelaxMode::Implicit] {
        let eta = u_log_u();
        let mut cfg = IntegrateConfig::fixed(0.1);
        cfg.relax = RelaxConfig { mode, ..RelaxConfig::default() };
        let tr = integrate(&LvPd, &MpScheme::mprk22(1.0).unwrap(), Some(&eta), &cfg, 0.0, &[2.0, 1.0], 20.0)
            .map_err(|e| format!("lv_pd {mode}: {e}"))?;
        note(format!("lv_pd {mode}"), sum_drift(&tr, 2));
        for p in [
            problem("advection", "kind=log"),
            problem("advection", "kind=sqrt"),
            problem("advection", "kind=inv"),
            problem("isothermal_euler", ""),
        ] {
            let tr = run(&p, &p.defaults.integrate_config(mode)).map_err(|e| format!("{} {mode}: {e}", p.name))?;
            note(format!("{} {:?} {mode}", p.name, p.params), sum_drift(&tr, p.sys.dim()));
        }
    }
    for (mode, tr) in strat {
        note(format!("stratospheric {mode}"), sum_drift(tr, 6));
    }
    check(worst.0 <= 1e-11, format!("max relative drift {:.2e} ({})", worst.0, worst.1))
}

fn entropy_conservation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [
        problem("lotka_volterra", ""),
        problem("advection", "kind=log,n=100"),
        problem("advection", "kind=sqrt,n=100"),
        problem("advection", "kind=inv,n=100"),
        problem("isothermal_euler", "n=100"),
    ] {
        let eta = p.entropy().unwrap();
        let relaxed =
            run(&p, &p.defaults.integrate_config(p.defaults.relax)).map_err(|e| format!("{}: {e}", p.name))?;
        let plain = run(&p, &p.defaults.integrate_config(RelaxMode::None)).map_err(|e| format!("{}: {e}", p.name))?;
        let scale = eta.eval(&p.u0).unwrap().abs().max(1.0);
        let bound = relaxed.steps.len() as f64 * 1e-10 * scale;
        let (dr, dp) = (eta_drift(eta, &relaxed), eta_drift(eta, &plain));
        ok &= dr <= bound && dp > bound;
        lines.push(format!("{} {:.1e}/{:.1e}/{:.1e}", eta.name, dr, bound, dp));
    }
    check(ok, format!("relaxed/bound/unrelaxed: {}", lines.join(", ")))
}

fn dissipation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for m in ["3", "5"] {
        let p = problem("pme", &format!("m={m},n=160"));
        let tr = run(&p, &p.defaults.integrate_config(RelaxMode::ClampedDissipative)).map_err(|e| e.to_string())?;
        let eta = p.entropy().unwrap();
        let mut prev = eta.eval(&p.u0).unwrap();
        let mut increases = 0;
        for s in &tr.steps {
            let e = eta.eval(&s.u).unwrap();
            if e > prev + 1e-12 {
                increases += 1;
            }
            prev = e;
        }
        let above = tr.steps.iter().filter(|s| s.gamma > 1.0).count();
        let at_one = tr.steps.iter().filter(|s| s.gamma == 1.0).count() as f64 / tr.steps.len() as f64;
        ok &= increases == 0 && above == 0 && at_one >= 0.99;
        lines.push(format!(
            "m={m} {}: {} steps, eta increases {increases}, gamma>1 {above}, gamma=1 fraction {at_one:.3}",
            p.defaults.scheme,
            tr.steps.len()
        ));
    }
    check(ok, lines.join("; "))
}

/// One entry of the convergence ladder.
struct LadderPoint {
    dt: f64,
    err: f64,
    gamma_dev: f64,
}

/// Ladder results per scheme and relaxation mode.
struct Study {
    rows: Vec<(MpScheme, RelaxMode, Vec<LadderPoint>)>,
    secs: f64,
}

impl Study {
    /// Smooth advection, N=16, t_end=1, five halvings from 0.02. All runs
    /// share one reference pass at the finest step divided by the oracle
    /// refinement, visiting the final times in increasing order.
    fn run() -> std::result::Result<Self, String> {
        let started = Instant::now();
        let p = problem("advection", "kind=log,n=16");
        let dts: Vec<f64> = (0..5).map(|i| 0.02 / 2f64.powi(i)).collect();
        let combos = [
            (MpScheme::mprk22(1.0).unwrap(), SigmaMode::Frozen),
            (MpScheme::mpssprk2(0.5, 1.0).unwrap(), SigmaMode::Dense),
            (MpScheme::mprk43i(0.5, 0.75).unwrap(), SigmaMode::Bootstrap),
        ];
        let mut finals = Vec::new();
        let mut rows = Vec::new();
        for (scheme, sigma) in combos {
            for mode in [RelaxMode::None, RelaxMode::Implicit] {
                let mut pts = Vec::new();
                for &dt in &dts {
                    let mut cfg = IntegrateConfig::fixed(dt);
                    cfg.relax = RelaxConfig { mode, sigma_mode: sigma, ..RelaxConfig::default() };
                    let tr = integrate(p.sys.as_ref(), &scheme, p.entropy(), &cfg, 0.0, &p.u0, 1.0)
                        .map_err(|e| format!("{scheme} {mode} dt={dt}: {e}"))?;
                    finals.push((tr.final_time(), tr.final_state().to_vec(), rows.len(), pts.len()));
                    pts.push(LadderPoint { dt, err: f64::NAN, gamma_dev: tr.max_gamma_deviation() });
                }
                rows.push((scheme.clone(), mode, pts));
            }
        }
        finals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut oracle = Oracle::new(p.sys.as_ref(), 0.0, &p.u0, dts[4] / ORACLE_REFINEMENT).unwrap();
        for (t, u, row, col) in finals {
            let r = oracle.advance_to(t).map_err(|e| e.to_string())?;
            rows[row].2[col].err = u.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        }
        Ok(Self { rows, secs: started.elapsed().as_secs_f64() })
    }
}

fn slope_of(pts: &[LadderPoint], f: impl Fn(&LadderPoint) -> f64) -> f64 {
    loglog_slope(&pts.iter().map(|q| q.dt).collect::<Vec<_>>(), &pts.iter().map(f).collect::<Vec<_>>())
}

fn order(study: &Study) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (scheme, mode, pts) in &study.rows {
        let slope = slope_of(pts, |q| q.err);
        ok &= (slope - scheme.order as f64).abs() <= 0.2;
        lines.push(format!("{scheme} {mode} {slope:.2}"));
    }
    check(ok && study.secs < 60.0, format!("{}, {:.1} s", lines.join(", "), study.secs))
}

fn gamma_scaling(study: &Study) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (scheme, _, pts) in study.rows.iter().filter(|r| r.1 == RelaxMode::Implicit) {
        let slope = slope_of(pts, |q| q.gamma_dev);
        let want = scheme.order as f64 - 1.0;
        ok &= (slope - want).abs() <= 0.3;
        lines.push(format!("{scheme} {slope:.2} (want {want})"));
    }
    check(ok, lines.join(", "))
}

/// Slope of the running-max error envelope over `t in [t_lo, 500]`,
/// measured in the max norm.
fn envelope_slope(p: &ProblemDescriptor, mode: RelaxMode, t_lo: f64) -> std::result::Result<f64, String> {
    let mut cfg = p.defaults.integrate_config(mode);
    cfg.dt0 = 1.0;
    let tr = integrate(p.sys.as_ref(), &p.defaults.scheme, p.entropy(), &cfg, 0.0, &p.u0, 500.0)
        .map_err(|e| format!("{mode}: {e}"))?;
    let mut oracle = Oracle::new(p.sys.as_ref(), 0.0, &p.u0, 1.0 / ORACLE_REFINEMENT).unwrap();
    let (mut ts, mut env) = (Vec::new(), Vec::new());
    let mut running = 0.0f64;
    for s in &tr.steps {
        let r = oracle.advance_to(s.t).unwrap();
        let e = (s.u[0] - r[0]).abs().max((s.u[1] - r[1]).abs());
        running = running.max(e);
        if s.t >= t_lo {
            ts.push(s.t);
            env.push(running);
        }
    }
    Ok(loglog_slope(&ts, &env))
}

fn lv_error_growth() -> Outcome {
    let p = problem("lotka_volterra", "");
    // the first two periods are transient
    let plain = envelope_slope(&p, RelaxMode::None, 10.0)?;
    let relaxed = envelope_slope(&p, RelaxMode::Implicit, 10.0)?;
    check(
        (plain - 2.0).abs() <= 0.3 && (relaxed - 1.0).abs() <= 0.3,
        format!("envelope slope unrelaxed {plain:.2} (want 2), relaxed {relaxed:.2} (want 1)"),
    )
}

fn stratospheric_runs() -> std::result::Result<Vec<(RelaxMode, Trajectory)>, String> {
    let p = problem("stratospheric", "");
    [RelaxMode::None, RelaxMode::Implicit]
        .into_iter()
        .map(|mode| {
            run(&p, &p.defaults.integrate_config(mode))
                .map(|tr| (mode, tr))
                .map_err(|e| format!("stratospheric {mode}: {e}"))
        })
        .collect()
}

fn second_invariant(strat: &[(RelaxMode, Trajectory)], secs: f64) -> Outcome {
    let p = problem("stratospheric", "");
    let eta = p.entropy().unwrap();
    let scale = eta.eval(&p.u0).unwrap().abs().max(1.0);
    let relaxed = &strat.iter().find(|r| r.0 == RelaxMode::Implicit).unwrap().1;
    let plain = &strat.iter().find(|r| r.0 == RelaxMode::None).unwrap().1;
    let bound = relaxed.steps.len() as f64 * 1e-10 * scale;
    let (dr, dp) = (eta_drift(eta, relaxed), eta_drift(eta, plain));
    check(
        dr <= bound && dp > 10.0 * bound && secs < 120.0,
        format!(
            "relaxed drift {dr:.2e} <= {bound:.2e} ({} steps), unrelaxed {dp:.2e}, {secs:.1} s",
            relaxed.steps.len()
        ),
    )
}

fn derivative_fd() -> Outcome {
    let combos = [
        (MpScheme::mprk22(1.0).unwrap(), SigmaMode::Frozen),
        (MpScheme::mprk22(1.0).unwrap(), SigmaMode::Dense),
        (MpScheme::mprk22(1.0).unwrap(), SigmaMode::Bootstrap),
        (MpScheme::mpssprk2(0.5, 1.0).unwrap(), SigmaMode::Frozen),
        (MpScheme::mpssprk2(0.5, 1.0).unwrap(), SigmaMode::Dense),
        (MpScheme::mpssprk2(0.5, 1.0).unwrap(), SigmaMode::Bootstrap),
        (MpScheme::mprk43i(0.5, 0.75).unwrap(), SigmaMode::Frozen),
        (MpScheme::mprk43i(0.5, 0.75).unwrap(), SigmaMode::Bootstrap),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut count = 0;
    for (scheme, mode) in &combos {
        for _ in 0..100 {
            let d = rng.gen_range(2..6);
            let sys = RandomPds::sample(&mut rng, d);
            let u0 = positive_state(&mut rng, d);
            let dt = rng.gen_range(0.05..1.0);
            let g = rng.gen_range(0.6..1.6);
            let rec = step(&sys, scheme, 0.0, &u0, dt).map_err(|e| e.to_string())?;
            let ug = gamma_update(scheme, &rec, g, *mode).map_err(|e| e.to_string())?;
            let du = gamma_update_derivative(scheme, &rec, g, *mode, &ug).map_err(|e| e.to_string())?;
            let up = gamma_update(scheme, &rec, g + h, *mode).unwrap();
            let um = gamma_update(scheme, &rec, g - h, *mode).unwrap();
            let num = du
                .iter()
                .zip(up.iter().zip(&um))
                .map(|(a, (p, m))| (a - (p - m) / (2.0 * h)).abs())
                .fold(0.0, f64::max);
            let den = du.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if den > 0.0 {
                worst = worst.max(num / den);
            }
            count += 1;
        }
    }
    check(worst <= 1e-6, format!("{count} instances, worst relative error {worst:.2e}"))
}

fn exchange_contrast() -> Outcome {
    let scheme = MpScheme::mprk22(1.0).unwrap();
    let rec = step(&Exchange, &scheme, 0.0, &[1.0, 1.0], 1.0).unwrap();
    let affine: Vec<f64> = rec.u_n.iter().zip(&rec.u_next).map(|(a, b)| a + 2.0 * (b - a)).collect();
    let u = gamma_update(&scheme, &rec, 2.0, SigmaMode::Frozen).unwrap();
    let exact = (u[0] - 0.25).abs() <= 1e-15 && (u[1] - 1.75).abs() <= 1e-15;
    check(affine.iter().any(|&v| v < 0.0) && exact, format!("affine point {affine:?}, gamma update {u:?}"))
}

fn pme_accuracy() -> Outcome {
    let mut errs = Vec::new();
    for n in [80, 160, 320] {
        let p = problem("pme", &format!("m=3,n={n}"));
        let tr = run(&p, &p.defaults.integrate_config(p.defaults.relax)).map_err(|e| e.to_string())?;
        let t = tr.final_time();
        let centers = p.mesh.as_ref().unwrap().centers();
        let err =
            tr.final_state().iter().zip(&centers).map(|(u, &x)| (u - barenblatt(3.0, t, x)).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    check(
        errs.windows(2).all(|w| w[1] < w[0]),
        format!(
            "L-inf errors N=80/160/320: {}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn main() {
    let started = Instant::now();
    let t = Instant::now();
    let strat = stratospheric_runs();
    let strat_secs = t.elapsed().as_secs_f64();
    let study = Study::run();
    let with_study = |f: fn(&Study) -> Outcome| study.as_ref().map_err(Clone::clone).and_then(f);

    let results: Vec<(&str, Check<'_>)> = vec![
        ("positivity", Box::new(positivity)),
        ("linear invariants", Box::new(|| conservation(strat.as_ref().map_err(Clone::clone)?))),
        ("entropy conservation", Box::new(entropy_conservation)),
        ("entropy dissipation", Box::new(dissipation)),
        ("order of accuracy", Box::new(|| with_study(order))),
        ("gamma scaling", Box::new(|| with_study(gamma_scaling))),
        ("lotka-volterra error growth", Box::new(lv_error_growth)),
        (
            "stratospheric second invariant",
            Box::new(|| second_invariant(strat.as_ref().map_err(Clone::clone)?, strat_secs)),
        ),
        ("derivative system", Box::new(derivative_fd)),
        ("exchange contrast", Box::new(exchange_contrast)),
        ("pme accuracy", Box::new(pme_accuracy)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in results.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{:.1} s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
