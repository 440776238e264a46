//! CSV and metadata writers. Numbers use `{:.16e}` (17 significant digits),
//! which does not depend on the locale.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use relax_mprk_core::Trajectory;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const RUN_HEADER: &str = "step,t,dt,gamma,relax_status,eta,inv1,inv2,err_ref";
pub const CONVERGENCE_HEADER: &str = "dt,error,order,gamma_dev";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Destination given by `--out`, or standard output.
pub struct Sink {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> CliResult<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { path: path.map(Path::to_path_buf), inner })
    }

    pub fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.inner, "{s}").map_err(|e| self.err(e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|e| self.err(e))
    }

    fn err(&self, e: io::Error) -> CliError {
        CliError::io(self.path.as_deref().unwrap_or(Path::new("<stdout>")), e)
    }
}

/// `w^T u` for the first two linear invariants; `1^T u` stands in for the
/// first when the system declares none.
fn invariants(cfg: &RunConfig, u: &[f64]) -> (f64, Option<f64>) {
    let inv = cfg.problem.sys.linear_invariants();
    let dot = |w: &[f64]| w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    let first = inv.first().map_or_else(|| u.iter().sum(), |w| dot(w));
    (first, inv.get(1).map(|w| dot(w)))
}

/// One row per accepted step, preceded by the initial state as step 0.
pub fn write_run(sink: &mut Sink, cfg: &RunConfig, traj: &Trajectory, reference: Option<&[Vec<f64>]>) -> CliResult<()> {
    let err = |i: usize, u: &[f64]| reference.map(|r| crate::reference::max_error(u, &r[i]));
    sink.line(RUN_HEADER)?;
    let (i1, i2) = invariants(cfg, &traj.u0);
    sink.line(&format!(
        "0,{},{},{},initial,{},{},{},{}",
        num(traj.t0),
        num(0.0),
        num(1.0),
        opt(traj.eta0),
        num(i1),
        opt(i2),
        opt(err(0, &traj.u0))
    ))?;
    for (n, s) in traj.steps.iter().enumerate() {
        let (i1, i2) = invariants(cfg, &s.u);
        sink.line(&format!(
            "{},{},{},{},{},{},{},{},{}",
            n + 1,
            num(s.t),
            num(s.dt),
            num(s.gamma),
            s.status,
            opt(s.eta),
            num(i1),
            opt(i2),
            opt(err(n + 1, &s.u))
        ))?;
    }
    Ok(())
}

/// Full state vectors, one row per accepted step.
pub fn write_states(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut sink = Sink::open(Some(path))?;
    let d = traj.u0.len();
    let cols: Vec<String> = (0..d).map(|k| format!("u{k}")).collect();
    sink.line(&format!("step,t,{}", cols.join(",")))?;
    let rows = std::iter::once((traj.t0, traj.u0.as_slice())).chain(traj.steps.iter().map(|s| (s.t, s.u.as_slice())));
    for (n, (t, u)) in rows.enumerate() {
        let vals: Vec<String> = u.iter().map(|&v| num(v)).collect();
        sink.line(&format!("{n},{},{}", num(t), vals.join(",")))?;
    }
    sink.finish()
}

/// `<out>.meta` next to the CSV.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// `state.csv` in the directory of the CSV.
pub fn state_path(out: Option<&Path>) -> PathBuf {
    out.and_then(Path::parent).unwrap_or(Path::new("")).join("state.csv")
}

pub fn write_meta(path: &Path, entries: &[(String, String)]) -> CliResult<()> {
    let mut sink = Sink::open(Some(path))?;
    for (k, v) in entries {
        sink.line(&format!("{k}={v}"))?;
    }
    sink.finish()
}
