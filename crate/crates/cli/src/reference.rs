//! Reference solutions: closed forms where available, otherwise a fine-step
//! oracle whose results are cached on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use relax_mprk_core::problems::ORACLE_REFINEMENT;
use relax_mprk_core::{Oracle, Reference};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Whether `cfg` can produce reference values at all.
pub fn available(cfg: &RunConfig) -> bool {
    matches!(cfg.problem.reference, Reference::Exact(_)) || cfg.oracle
}

/// Error to report when a reference is required but missing.
pub fn missing(cfg: &RunConfig) -> CliError {
    CliError::Config(format!(
        "problem {} has no closed-form reference; pass --oracle to use a fine-step reference",
        cfg.problem.name
    ))
}

/// Reference states at the non-decreasing `times`, or `None` without one.
/// The oracle runs with step `dt / ORACLE_REFINEMENT`.
pub fn states_at(cfg: &RunConfig, times: &[f64], dt: f64) -> CliResult<Option<Vec<Vec<f64>>>> {
    match &cfg.problem.reference {
        Reference::Exact(f) => Ok(Some(times.iter().map(|&t| f(t)).collect())),
        Reference::Oracle if cfg.oracle => oracle_states(cfg, times, dt / ORACLE_REFINEMENT).map(Some),
        Reference::Oracle => Ok(None),
    }
}

fn cache_key(cfg: &RunConfig, times: &[f64], h: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.problem.name.as_bytes());
    for (k, v) in &cfg.problem.params {
        hasher.update(format!("\n{k}={v}").as_bytes());
    }
    hasher.update(cfg.problem.tspan.0.to_bits().to_le_bytes());
    hasher.update(h.to_bits().to_le_bytes());
    for t in times {
        hasher.update(t.to_bits().to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("oracle-{key}.csv"))
}

fn read_cache(path: &Path, rows: usize, dim: usize) -> Option<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).ok()?;
    let parsed: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<_>>()?;
    (parsed.len() == rows && parsed.iter().all(|r| r.len() == dim)).then_some(parsed)
}

fn write_cache(path: &Path, states: &[Vec<f64>]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    for s in states {
        let line: Vec<String> = s.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(f, "{}", line.join(",")).map_err(|e| CliError::io(&tmp, e))?;
    }
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn oracle_states(cfg: &RunConfig, times: &[f64], h: f64) -> CliResult<Vec<Vec<f64>>> {
    let p = &cfg.problem;
    let path = cache_path(&cfg.cache_dir, &cache_key(cfg, times, h));
    if let Some(states) = read_cache(&path, times.len(), p.u0.len()) {
        return Ok(states);
    }
    let mut oracle = Oracle::new(&*p.sys, p.tspan.0, &p.u0, h)?;
    let states = times.iter().map(|&t| oracle.advance_to(t).map(<[f64]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    write_cache(&path, &states)?;
    Ok(states)
}

/// Max-norm distance.
pub fn max_error(u: &[f64], reference: &[f64]) -> f64 {
    u.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
