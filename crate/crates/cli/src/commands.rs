use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use freebound::boundary::{diagnose, extract_boundary, ExtractionMethod};
use freebound::fixedpoint::{check_bn_limit, iterate};
use freebound::io::{write_boundary_csv, write_diagnostics_csv, write_json, write_surface_csv, write_trace_csv, write_volterra_csv, Provenance};
use freebound::mc_oracle::{default_steps, log_return_moments, martingale_check, policy_value, price_european, simulate};
use freebound::boundary::expected_b0_limit;
use freebound::solver::{solve_pide, SolutionSurface};
use freebound::verify::{format_line, run_all, CheckResult};
use freebound::volterra::solve_volterra;
use freebound::{Error, ModelSummary, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub prov: Provenance,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Self {
        let prov = Provenance::new(serde_json::to_value(&cfg).expect("config serializes"));
        Self { cfg, prov }
    }

    fn out(&self, name: &str) -> Result<BufWriter<File>> {
        let dir = &self.cfg.out;
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| io(&path, e))
    }

    fn finish(&self, mut w: BufWriter<File>) -> Result<()> {
        w.flush().map_err(|e| io(&self.cfg.out, e))
    }

    fn json(&self, name: &str, key: &str, body: &impl Serialize) -> Result<()> {
        let mut w = self.out(name)?;
        write_json(&mut w, key, body, &self.prov)?;
        self.finish(w)
    }

    fn solve(&self) -> Result<SolutionSurface<f64>> {
        let p = self.cfg.market_params()?;
        let law = self.cfg.jump_law()?;
        solve_pide(&p, &law, &self.cfg.grid()?, self.cfg.solver.scheme, &self.cfg.solver_options())
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Unsupported(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct SolveSummary {
    price: f64,
    spot: f64,
    model: ModelSummary<f64>,
    b_at_maturity: Option<f64>,
    b0_limit_expected: f64,
}

pub fn solve(ctx: &Context) -> Result<()> {
    let s = ctx.solve()?;
    let p = &s.params;
    let mask = extract_boundary(&s, ExtractionMethod::MaskEdge)?;
    let smooth = extract_boundary(&s, ExtractionMethod::SmoothfitCross)?;
    let mut w = ctx.out("surface.csv")?;
    write_surface_csv(&mut w, &s, &ctx.prov)?;
    ctx.finish(w)?;
    for (name, c) in [("boundary.csv", &mask), ("boundary_smoothfit.csv", &smooth)] {
        let mut w = ctx.out(name)?;
        write_boundary_csv(&mut w, c, &ctx.prov)?;
        ctx.finish(w)?;
    }
    let summary = SolveSummary {
        price: s.price(ctx.cfg.market.spot, s.grid.nt),
        spot: ctx.cfg.market.spot,
        model: ModelSummary::new(p, &s.law)?,
        b_at_maturity: mask.at_level(s.grid.nt),
        b0_limit_expected: expected_b0_limit(p, &s.law)?,
    };
    println!("price {:.6} at S = {}", summary.price, summary.spot);
    ctx.json("solve.json", "solve", &summary)
}

#[derive(Serialize)]
struct IterateSummary<'a> {
    sup_diffs: &'a [f64],
    monotonicity_violations: &'a [f64],
    converged_at: Option<usize>,
    bn_limit: freebound::fixedpoint::BnLimitReport<f64>,
}

pub fn iterate_cmd(ctx: &Context) -> Result<()> {
    let p = ctx.cfg.market_params()?;
    let law = ctx.cfg.jump_law()?;
    let trace = iterate(&p, &law, &ctx.cfg.grid()?, &ctx.cfg.iterate_options(), &ctx.cfg.solver_options())?;
    let mut w = ctx.out("trace.csv")?;
    write_trace_csv(&mut w, &trace, &ctx.prov)?;
    ctx.finish(w)?;
    let bn_limit = check_bn_limit(&trace, expected_b0_limit(&p, &law)?)?;
    let converged = trace.converged_at.map_or("not converged".to_string(), |n| format!("converged at {n}"));
    println!("{} iterates, {converged}, b_n(5 dt) limit check passed: {}", trace.surfaces.len(), bn_limit.passed);
    let summary = IterateSummary {
        sup_diffs: &trace.sup_diffs,
        monotonicity_violations: &trace.monotonicity_violations,
        converged_at: trace.converged_at,
        bn_limit,
    };
    ctx.json("iterate.json", "iterate", &summary)
}

pub fn diagnose_cmd(ctx: &Context) -> Result<()> {
    let s = ctx.solve()?;
    let rep = diagnose(&s, &ctx.cfg.solver_options(), &ctx.cfg.diagnose_options())?;
    let mut w = ctx.out("diagnostics.csv")?;
    write_diagnostics_csv(&mut w, &rep, &ctx.prov)?;
    ctx.finish(w)?;
    let fit = rep.holder_fit.map_or("unavailable".to_string(), |(a, r2)| format!("{a:.4} (r2 {r2:.4})"));
    let measured = rep.b0_limit_measured.map_or("unavailable".to_string(), |b| format!("{b:.6}"));
    println!("{} diagnostic levels, Hölder fit {fit}, b(0+) expected {:.6} measured {measured}", rep.levels.len(), rep.b0_limit_expected);
    for msg in &rep.warnings {
        log::warn!("{msg}");
    }
    ctx.json("diagnostics.json", "diagnostics", &rep)
}

#[derive(Serialize)]
struct VolterraSummary {
    levels: usize,
    median_relative_error: Option<f64>,
}

pub fn volterra_cmd(ctx: &Context) -> Result<()> {
    let s = ctx.solve()?;
    let curve = extract_boundary(&s, ExtractionMethod::SmoothfitCross)?;
    let d = &ctx.cfg.diagnostics;
    let t0 = d.volterra_t0 * s.grid.maturity;
    let fd = if d.fd_half_width == 0 { freebound::boundary::default_fd_half_width(s.grid.nt) } else { d.fd_half_width };
    let res = solve_volterra(&curve, &s, t0, &ctx.cfg.solver_options(), d.volterra_coefficient, fd)?;
    let mut w = ctx.out("volterra.csv")?;
    write_volterra_csv(&mut w, &res, &ctx.prov)?;
    ctx.finish(w)?;
    let mut errs: Vec<f64> = res.v.iter().zip(&res.v_fd).skip(1).map(|(a, b)| ((a - b) / b).abs()).filter(|e| e.is_finite()).collect();
    errs.sort_by(f64::total_cmp);
    let summary = VolterraSummary { levels: res.v.len(), median_relative_error: errs.get(errs.len() / 2).copied() };
    let median = summary.median_relative_error.map_or("unavailable".to_string(), |m| format!("{m:.4}"));
    println!("{} levels, median |v - v_fd| / |v_fd| = {median}", summary.levels);
    ctx.json("volterra.json", "volterra", &summary)
}

#[derive(Serialize)]
struct McSummary {
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    european: freebound::mc_oracle::McEstimate,
    martingale: freebound::mc_oracle::McEstimate,
    log_moments: freebound::mc_oracle::LogMoments,
    policy: Option<freebound::mc_oracle::McEstimate>,
    pide_price: Option<f64>,
}

pub fn mc_cmd(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let p = cfg.market_params()?;
    let law = cfg.jump_law()?;
    let steps = if cfg.mc.steps == 0 { default_steps(p.maturity) } else { cfg.mc.steps };
    let batch = simulate(&p, &law, cfg.market.spot, cfg.mc.paths, steps, cfg.seed)?;
    let european = price_european(&batch, p.strike, p.r)?;
    let martingale = martingale_check(&batch, p.r, p.q)?;
    let log_moments = log_return_moments(&batch)?;
    let (policy, pide_price) = if cfg.mc.policy {
        let s = ctx.solve()?;
        let curve = extract_boundary(&s, ExtractionMethod::SmoothfitCross)?;
        (Some(policy_value(&p, &law, cfg.market.spot, &curve, cfg.mc.paths, steps, cfg.seed)?), Some(s.price(cfg.market.spot, s.grid.nt)))
    } else {
        (None, None)
    };
    println!("European {:.6} +- {:.6}, martingale {:.6} +- {:.6}", european.value, european.std_error, martingale.value, martingale.std_error);
    if let (Some(v), Some(pide)) = (policy, pide_price) {
        println!("boundary policy {:.6} +- {:.6}, PIDE {:.6}", v.value, v.std_error, pide);
    }
    let summary = McSummary { n_paths: cfg.mc.paths, n_steps: steps, seed: cfg.seed, european, martingale, log_moments, policy, pide_price };
    ctx.json("mc.json", "mc", &summary)
}

/// Runs the acceptance suite; `Ok(true)` iff every check passed.
pub fn verify_cmd(ctx: &Context) -> Result<bool> {
    let results: Vec<CheckResult> = run_all(&ctx.cfg.verify_options());
    let mut table = ctx.out("verify.txt")?;
    for r in &results {
        let line = format_line(r);
        println!("{line}");
        writeln!(table, "{line}").map_err(|e| io(&ctx.cfg.out, e))?;
    }
    ctx.finish(table)?;
    ctx.json("verify.json", "checks", &results)?;
    Ok(results.iter().all(|r| r.passed))
}
