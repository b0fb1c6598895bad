//! Experiment configuration: a TOML tree with dotted command-line overrides.

use std::path::{Path, PathBuf};

use freebound::boundary::DiagnoseOptions;
use freebound::fixedpoint::IterateOptions;
use freebound::verify::VerifyOptions;
use freebound::volterra::JumpCoefficient;
use freebound::{Grid64, JumpLaw64, MarketParams64, Scheme, SolverOptions64};
use serde::{Deserialize, Serialize};

/// Human-readable schema with defaults, shown by `--help`.
pub const SCHEMA: &str = "\
CONFIG (TOML; every key optional, unknown keys rejected)
  seed = 42                      RNG seed (also --seed)
  out = \"out\"                    output directory (also --out)
  [market]   r = 0.05, q = 0.0, lambda = 0.0, strike = 100.0, maturity = 1.0,
             sigma = 0.2, spot = 100.0
  [jump]     kind = \"merton\" (mean = -0.1, std = 0.2); a given [jump] table needs all its keys
             | kind = \"kou\" (p, eta1, eta2) | kind = \"discrete\" (points = [[z, w], ...])
  [grid]     nx = 400, nt = 400, x_min, x_max (default log K -+ max(6 sigma sqrt(T), 4 jump_scale))
  [solver]   scheme = \"penalty\" | \"psor\", jump_tol = 1e-10, max_inner = 200,
             psor_omega = 1.2, psor_tol = 1e-9, psor_max_sweeps = 10000,
             penalty_epsilon = 1e-6, penalty_slack = 1.0, newton_max = 50,
             n_quad = 8, tail_width = 8.0, contact_tol = 1e-8
  [diagnostics] holder_lo = 0.2, holder_hi = 1.0 (fractions of T), fd_half_width = 0 (auto),
             limit_level = 5, volterra_t0 = 0.2 (fraction of T),
             volterra_coefficient = \"derived\" | \"as_printed\"
  [iterate]  n_max = 50, tol = 1e-6 (relative to strike)
  [mc]       paths = 100000, steps = 0 (252 per year), policy = true
  [verify]   mc_paths = 1000000, n = 400

OVERRIDES
  any key as a dotted flag, e.g. --grid.nx 200 --market.lambda=0.3 --jump.kind kou";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub market: MarketConfig,
    pub jump: JumpConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub iterate: IterateConfig,
    pub mc: McConfig,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: PathBuf::from("out"),
            market: MarketConfig::default(),
            jump: JumpConfig::default(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            iterate: IterateConfig::default(),
            mc: McConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub r: f64,
    pub q: f64,
    pub lambda: f64,
    pub strike: f64,
    pub maturity: f64,
    pub sigma: f64,
    pub spot: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self { r: 0.05, q: 0.0, lambda: 0.0, strike: 100.0, maturity: 1.0, sigma: 0.2, spot: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    Merton { mean: f64, std: f64 },
    Kou { p: f64, eta1: f64, eta2: f64 },
    Discrete { points: Vec<[f64; 2]> },
}

impl Default for JumpConfig {
    fn default() -> Self {
        Self::Merton { mean: -0.1, std: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 400, nt: 400, x_min: None, x_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub jump_tol: f64,
    pub max_inner: usize,
    pub psor_omega: f64,
    pub psor_tol: f64,
    pub psor_max_sweeps: usize,
    pub penalty_epsilon: f64,
    pub penalty_slack: f64,
    pub newton_max: usize,
    pub n_quad: usize,
    pub tail_width: f64,
    pub contact_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions64::default();
        Self {
            scheme: Scheme::Penalty,
            jump_tol: o.jump_tol,
            max_inner: o.max_inner,
            psor_omega: o.psor_omega,
            psor_tol: o.psor_tol,
            psor_max_sweeps: o.psor_max_sweeps,
            penalty_epsilon: o.penalty_epsilon,
            penalty_slack: o.penalty_slack,
            newton_max: o.newton_max,
            n_quad: o.n_quad,
            tail_width: o.tail_width,
            contact_tol: o.contact_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub holder_lo: f64,
    pub holder_hi: f64,
    pub fd_half_width: usize,
    pub limit_level: usize,
    pub volterra_t0: f64,
    pub volterra_coefficient: JumpCoefficient,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let d = DiagnoseOptions::<f64>::default();
        Self {
            holder_lo: d.holder_lo,
            holder_hi: d.holder_hi,
            fd_half_width: d.fd_half_width,
            limit_level: d.limit_level,
            volterra_t0: 0.2,
            volterra_coefficient: JumpCoefficient::Derived,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateConfig {
    pub n_max: usize,
    pub tol: f64,
}

impl Default for IterateConfig {
    fn default() -> Self {
        Self { n_max: 50, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub steps: usize,
    pub policy: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { paths: 100_000, steps: 0, policy: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub mc_paths: usize,
    pub n: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let v = VerifyOptions::default();
        Self { mc_paths: v.mc_paths, n: v.n }
    }
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Dotted-path overrides as `(path, raw value)` pairs.
pub type Overrides = Vec<(String, String)>;

/// Splits `--a.b value` and `--a.b=value` pairs out of the arguments.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), ConfigError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--").filter(|f| f.split('=').next().is_some_and(|k| k.contains('.'))) else {
            rest.push(a);
            continue;
        };
        match flag.split_once('=') {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| ConfigError(format!("override --{flag} needs a value")))?;
                overrides.push((flag.to_string(), v));
            }
        }
    }
    Ok((rest, overrides))
}

/// TOML literal if it parses as one, else a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}")).ok().and_then(|mut t| t.remove("v")).unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError(format!("override {key}: empty key segment")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError(format!("override {key}: {p} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

/// Reads the file (if any), applies overrides and validates against the schema.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig, ConfigError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        apply_override(&mut root, k, v)?;
    }
    let origin = path.map_or_else(|| "<defaults>".to_string(), |p| p.display().to_string());
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(root)).map_err(|e| {
        let at = e.path().to_string();
        ConfigError(format!("{origin}: at `{at}`: {}", e.into_inner()))
    })?;
    cfg.validate().map_err(|e| ConfigError(format!("{origin}: {e}")))?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn market_params(&self) -> freebound::Result<MarketParams64> {
        let m = &self.market;
        MarketParams64::constant(m.r, m.q, m.lambda, m.strike, m.maturity, m.sigma)
    }

    pub fn jump_law(&self) -> freebound::Result<JumpLaw64> {
        let law = match &self.jump {
            JumpConfig::Merton { mean, std } => JumpLaw64::Merton { mean: *mean, std: *std },
            JumpConfig::Kou { p, eta1, eta2 } => JumpLaw64::Kou { p: *p, eta1: *eta1, eta2: *eta2 },
            JumpConfig::Discrete { points } => JumpLaw64::Discrete { points: points.iter().map(|p| (p[0], p[1])).collect() },
        };
        law.validate()?;
        Ok(law)
    }

    pub fn grid(&self) -> freebound::Result<Grid64> {
        let p = self.market_params()?;
        let law = self.jump_law()?;
        let g = &self.grid;
        match (g.x_min, g.x_max) {
            (None, None) => Grid64::for_model(&p, &law, g.nx, g.nt),
            (lo, hi) => {
                let auto = Grid64::for_model(&p, &law, g.nx, g.nt)?;
                let grid = Grid64::new(lo.unwrap_or(auto.x_min), hi.unwrap_or(auto.x_max), g.nx, p.maturity, g.nt)?;
                grid.check_brackets(p.log_strike())?;
                Ok(grid)
            }
        }
    }

    pub fn solver_options(&self) -> SolverOptions64 {
        let s = &self.solver;
        SolverOptions64 {
            jump_tol: s.jump_tol,
            max_inner: s.max_inner,
            psor_omega: s.psor_omega,
            psor_tol: s.psor_tol,
            psor_max_sweeps: s.psor_max_sweeps,
            penalty_epsilon: s.penalty_epsilon,
            penalty_slack: s.penalty_slack,
            newton_max: s.newton_max,
            n_quad: s.n_quad,
            tail_width: s.tail_width,
            contact_tol: s.contact_tol,
        }
    }

    pub fn diagnose_options(&self) -> DiagnoseOptions<f64> {
        let d = &self.diagnostics;
        DiagnoseOptions { fd_half_width: d.fd_half_width, holder_lo: d.holder_lo, holder_hi: d.holder_hi, limit_level: d.limit_level }
    }

    pub fn iterate_options(&self) -> IterateOptions<f64> {
        IterateOptions { n_max: self.iterate.n_max, tol: self.iterate.tol * self.market.strike, scheme: self.solver.scheme }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions { seed: self.seed, mc_paths: self.verify.mc_paths, n: self.verify.n }
    }

    /// Model-level validation that the schema cannot express.
    pub fn validate(&self) -> freebound::Result<()> {
        self.market_params()?;
        self.jump_law()?;
        self.grid()?;
        if !(self.market.spot > 0.0 && self.market.spot.is_finite()) {
            return Err(freebound::Error::param("market.spot", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = split_overrides(args("solve --config a.toml --grid.nx 200 --market.lambda=0.3 --seed 3")).unwrap();
        assert_eq!(rest, args("solve --config a.toml --seed 3"));
        assert_eq!(ov, vec![("grid.nx".into(), "200".into()), ("market.lambda".into(), "0.3".into())]);
    }

    #[test]
    fn overrides_reach_the_config() {
        let ov = vec![("grid.nx".to_string(), "200".to_string()), ("jump.kind".into(), "kou".into()), ("jump.p".into(), "0.4".into())];
        let ov = [ov, vec![("jump.eta1".into(), "10".into()), ("jump.eta2".into(), "5".into())]].concat();
        let cfg = load(None, &ov).unwrap();
        assert_eq!(cfg.grid.nx, 200);
        assert_eq!(cfg.jump, JumpConfig::Kou { p: 0.4, eta1: 10.0, eta2: 5.0 });
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let err = load(None, &[("grid.nz".into(), "3".into())]).unwrap_err();
        assert!(err.0.contains("grid"), "{err}");
        let ov: Vec<(String, String)> = [("jump.kind", "merton"), ("jump.mean", "0"), ("jump.std", "0.2"), ("jump.sd", "3")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let err = load(None, &ov).unwrap_err();
        assert!(err.0.contains("sd"), "{err}");
        let err = load(None, &[("jump.std".into(), "0.3".into())]).unwrap_err();
        assert!(err.0.contains("kind"), "{err}");
    }
}
