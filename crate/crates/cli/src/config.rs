//! Flag and config-file handling, resolved against problem defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use relax_mprk_core::{
    build_problem, Adaptivity, IntegrateConfig, MpScheme, Params, ProblemDescriptor, RelaxMode, SchemeKind, SigmaMode,
    Solver,
};

use crate::error::{CliError, CliResult};

/// Options shared by `run` and `convergence`. Unset options fall back to the
/// config file, then to the problem's defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Problem name with optional parameters, e.g. `pme:m=3,n=160`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Scheme with parameters, e.g. `mprk22:1`, `mprk43i:0.5,0.75`, `mpssprk2:0.5,1`.
    #[arg(long)]
    pub method: Option<String>,
    /// none, clamped, geometric or implicit.
    #[arg(long)]
    pub relax: Option<String>,
    /// newton, regula_falsi, bisection or secant.
    #[arg(long)]
    pub solver: Option<String>,
    /// frozen, dense or bootstrap.
    #[arg(long)]
    pub sigma_mode: Option<String>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// fixed, pid, relax or pid_relax.
    #[arg(long)]
    pub adapt: Option<String>,
    #[arg(long)]
    pub gamma_tol: Option<f64>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write full solution vectors to `state.csv` next to the output.
    #[arg(long)]
    pub dump_state: bool,
    /// Recorded in the run metadata.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use a fine-step reference where no closed form exists.
    #[arg(long)]
    pub oracle: bool,
    /// Directory for cached reference solutions.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// `key=value` file with defaults for any of these options.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "problem",
    "method",
    "relax",
    "solver",
    "sigma-mode",
    "dt0",
    "t-end",
    "rtol",
    "atol",
    "adapt",
    "gamma-tol",
    "gamma-min",
    "gamma-max",
    "max-iters",
    "out",
    "dump-state",
    "seed",
    "oracle",
    "cache-dir",
];

pub const DEFAULT_CACHE_DIR: &str = ".relax-mprk-cache";

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value, got '{line}'", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key '{k}' (known: {})",
                i + 1,
                CONFIG_KEYS.join(", ")
            )));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::Config(format!("cannot parse {key}={v}")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("cannot parse {key}={v} as a boolean"))),
    }
}

impl RunArgs {
    /// Fills options left unset on the command line from the config file.
    pub fn merge_config_file(mut self) -> CliResult<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (k, v) in parse_config_file(&text)? {
            let v = v.as_str();
            match k.as_str() {
                "problem" => self.problem = self.problem.or(Some(v.into())),
                "method" => self.method = self.method.or(Some(v.into())),
                "relax" => self.relax = self.relax.or(Some(v.into())),
                "solver" => self.solver = self.solver.or(Some(v.into())),
                "sigma-mode" => self.sigma_mode = self.sigma_mode.or(Some(v.into())),
                "adapt" => self.adapt = self.adapt.or(Some(v.into())),
                "dt0" => self.dt0 = self.dt0.or(Some(parse(&k, v)?)),
                "t-end" => self.t_end = self.t_end.or(Some(parse(&k, v)?)),
                "rtol" => self.rtol = self.rtol.or(Some(parse(&k, v)?)),
                "atol" => self.atol = self.atol.or(Some(parse(&k, v)?)),
                "gamma-tol" => self.gamma_tol = self.gamma_tol.or(Some(parse(&k, v)?)),
                "gamma-min" => self.gamma_min = self.gamma_min.or(Some(parse(&k, v)?)),
                "gamma-max" => self.gamma_max = self.gamma_max.or(Some(parse(&k, v)?)),
                "max-iters" => self.max_iters = self.max_iters.or(Some(parse(&k, v)?)),
                "seed" => self.seed = self.seed.or(Some(parse(&k, v)?)),
                "out" => self.out = self.out.or(Some(v.into())),
                "cache-dir" => self.cache_dir = self.cache_dir.or(Some(v.into())),
                // a flag given on the command line cannot be switched off by the file
                "dump-state" => self.dump_state |= parse_bool(&k, v)?,
                "oracle" => self.oracle |= parse_bool(&k, v)?,
                _ => unreachable!("keys are checked while parsing"),
            }
        }
        Ok(self)
    }
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemDescriptor,
    /// Problem spec as given, e.g. `pme:m=3`.
    pub problem_spec: String,
    pub scheme: MpScheme,
    pub integrate: IntegrateConfig,
    pub t_end: f64,
    pub out: Option<PathBuf>,
    pub dump_state: bool,
    pub seed: u64,
    pub oracle: bool,
    pub cache_dir: PathBuf,
}

/// Splits `name:k=v,...` and builds the problem.
pub fn resolve_problem(spec: &str) -> CliResult<ProblemDescriptor> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let params = Params::parse(params).map_err(|e| CliError::Config(e.to_string()))?;
    build_problem(name.trim(), &params).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses `kind[:alpha[,beta]]`; missing parameters take the family's usual values.
pub fn parse_method(spec: &str) -> CliResult<MpScheme> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = SchemeKind::from_name(name.trim()).ok_or_else(|| {
        CliError::Config(format!("unknown method '{name}' (expected {})", SchemeKind::ALL.map(|k| k.name()).join(", ")))
    })?;
    let values: Vec<f64> = params
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("method parameter", s))
        .collect::<CliResult<_>>()?;
    let (alpha0, beta0) = default_parameters(kind);
    if values.len() > 2 || (kind == SchemeKind::Mprk22 && values.len() > 1) {
        return Err(CliError::Config(format!("too many parameters for {}: '{params}'", kind.name())));
    }
    let alpha = values.first().copied().unwrap_or(alpha0);
    let beta = values.get(1).copied().unwrap_or(beta0);
    relax_mprk_core::build_scheme(kind, alpha, beta).map_err(|e| CliError::Config(e.to_string()))
}

/// `(alpha, beta)` used when a method is named without parameters.
pub fn default_parameters(kind: SchemeKind) -> (f64, f64) {
    match kind {
        SchemeKind::Mprk22 => (1.0, 0.0),
        SchemeKind::Mprk43I => (0.5, 0.75),
        SchemeKind::Mpssprk2 => (0.5, 1.0),
    }
}

fn named<T: FromStr<Err = relax_mprk_core::Error>>(v: Option<&String>) -> CliResult<Option<T>> {
    v.map(|s| s.parse::<T>().map_err(|e| CliError::Config(e.to_string()))).transpose()
}

impl RunConfig {
    pub fn resolve(args: RunArgs) -> CliResult<Self> {
        let args = args.merge_config_file()?;
        let problem_spec = args
            .problem
            .clone()
            .ok_or_else(|| CliError::Config("--problem is required (see `relax-mprk list`)".into()))?;
        let problem = resolve_problem(&problem_spec)?;
        let d = &problem.defaults;
        let scheme = match &args.method {
            Some(m) => parse_method(m)?,
            None => d.scheme.clone(),
        };
        let relax: RelaxMode = named(args.relax.as_ref())?.unwrap_or(d.relax);
        let mut cfg = d.integrate_config(relax);
        if let Some(s) = named::<Solver>(args.solver.as_ref())? {
            cfg.relax.solver = s;
        }
        if let Some(s) = named::<SigmaMode>(args.sigma_mode.as_ref())? {
            cfg.relax.sigma_mode = s;
        } else if scheme.kind == SchemeKind::Mprk43I && cfg.relax.sigma_mode == SigmaMode::Dense {
            cfg.relax.sigma_mode = SigmaMode::Bootstrap;
        }
        if let Some(a) = named::<Adaptivity>(args.adapt.as_ref())? {
            cfg.adaptivity = a;
        }
        cfg.dt0 = args.dt0.unwrap_or(cfg.dt0);
        cfg.rtol = args.rtol.unwrap_or(cfg.rtol);
        cfg.atol = args.atol.unwrap_or(cfg.atol);
        cfg.relax.gamma_tol = args.gamma_tol.unwrap_or(cfg.relax.gamma_tol);
        cfg.relax.gamma_min = args.gamma_min.unwrap_or(cfg.relax.gamma_min);
        cfg.relax.gamma_max = args.gamma_max.unwrap_or(cfg.relax.gamma_max);
        cfg.relax.max_iters = args.max_iters.unwrap_or(cfg.relax.max_iters);

        if !(cfg.dt0 > 0.0) || !cfg.dt0.is_finite() {
            return Err(CliError::Config(format!("dt0 must be positive, got {}", cfg.dt0)));
        }
        let t_end = args.t_end.unwrap_or(problem.tspan.1);
        if !(t_end > problem.tspan.0) {
            return Err(CliError::Config(format!("t-end must exceed the start time {}, got {t_end}", problem.tspan.0)));
        }
        if relax != RelaxMode::None {
            cfg.relax.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let Some(eta) = problem.entropy() else {
                return Err(CliError::Config(format!("problem {} has no functional to relax", problem.name)));
            };
            if relax == RelaxMode::Geometric && !eta.monotone_nondecreasing {
                return Err(CliError::Config(format!(
                    "geometric relaxation needs a functional non-decreasing in every argument; {} on {} is not",
                    eta.name, problem.name
                )));
            }
        }
        if scheme.kind == SchemeKind::Mprk43I
            && cfg.relax.sigma_mode == SigmaMode::Dense
            && relax == RelaxMode::Implicit
        {
            return Err(CliError::Config("mprk43i has no dense sigma; use --sigma-mode bootstrap or frozen".into()));
        }
        if scheme.kind == SchemeKind::Mpssprk2 && problem.sys.has_rest_terms() {
            return Err(CliError::Config(format!(
                "mpssprk2 needs a conservative system; {} has rest terms",
                problem.name
            )));
        }
        Ok(Self {
            problem,
            problem_spec,
            scheme,
            integrate: cfg,
            t_end,
            out: args.out,
            dump_state: args.dump_state,
            seed: args.seed.unwrap_or(0),
            oracle: args.oracle,
            cache_dir: args.cache_dir.unwrap_or_else(|| Path::new(DEFAULT_CACHE_DIR).to_path_buf()),
        })
    }

    /// Every resolved setting as `key=value` lines, in a fixed order.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let c = &self.integrate;
        let mut m: Vec<(String, String)> =
            vec![("problem".into(), self.problem.name.into()), ("problem_spec".into(), self.problem_spec.clone())];
        m.extend(self.problem.params.iter().map(|(k, v)| (format!("problem.{k}"), v.clone())));
        m.extend([
            ("dim".into(), self.problem.sys.dim().to_string()),
            ("explicit_dim".into(), self.problem.sys.explicit_dim().to_string()),
            ("method".into(), self.scheme.kind.name().into()),
            ("alpha".into(), self.scheme.alpha.to_string()),
            (
                "beta".into(),
                if self.scheme.kind == SchemeKind::Mprk22 { String::new() } else { self.scheme.beta.to_string() },
            ),
            ("relax".into(), c.relax.mode.to_string()),
            ("functional".into(), self.problem.entropy().map_or(String::new(), |e| e.name.clone())),
            ("solver".into(), c.relax.solver.to_string()),
            ("sigma_mode".into(), c.relax.sigma_mode.to_string()),
            ("gamma_tol".into(), c.relax.gamma_tol.to_string()),
            ("gamma_min".into(), c.relax.gamma_min.to_string()),
            ("gamma_max".into(), c.relax.gamma_max.to_string()),
            ("max_iters".into(), c.relax.max_iters.to_string()),
            ("adapt".into(), c.adaptivity.to_string()),
            ("dt0".into(), c.dt0.to_string()),
            ("rtol".into(), c.rtol.to_string()),
            ("atol".into(), c.atol.to_string()),
            ("max_attempts".into(), c.max_attempts.to_string()),
            ("t0".into(), self.problem.tspan.0.to_string()),
            ("t_end".into(), self.t_end.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("oracle".into(), self.oracle.to_string()),
        ]);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parameters_default_per_family() {
        let s = parse_method("mprk43i").unwrap();
        assert_eq!((s.alpha, s.beta), (0.5, 0.75));
        let s = parse_method("mpssprk2:0.25").unwrap();
        assert_eq!((s.alpha, s.beta), (0.25, 1.0));
        assert_eq!(parse_method("mprk22:2").unwrap().alpha, 2.0);
        assert!(parse_method("mprk22:1,2").is_err());
        assert!(parse_method("mprk22:x").is_err());
    }

    #[test]
    fn config_file_comments_and_keys() {
        let m = parse_config_file("# c\n\nrelax = implicit # trailing\nsigma_mode=dense\n").unwrap();
        assert_eq!(m["relax"], "implicit");
        assert_eq!(m["sigma-mode"], "dense");
        assert!(matches!(parse_config_file("dt0"), Err(CliError::Config(_))));
        assert!(matches!(parse_config_file("speed=3"), Err(CliError::Config(_))));
    }

    #[test]
    fn mprk43i_dense_default_becomes_bootstrap() {
        let args =
            RunArgs { problem: Some("advection:n=10".into()), method: Some("mprk43i".into()), ..Default::default() };
        let cfg = RunConfig::resolve(args).unwrap();
        assert_eq!(cfg.integrate.relax.sigma_mode, SigmaMode::Bootstrap);
        let meta = cfg.metadata();
        assert!(meta.iter().any(|(k, v)| k == "sigma_mode" && v == "bootstrap"));
    }
}
