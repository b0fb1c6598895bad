//! Approximating scheme with a frozen jump source.
//!
//! Starting from `u_0 = (K - e^x)^+`, each iterate solves the diffusion-only
//! obstacle problem with reaction `r + lambda` and source
//! `f_n(x, t) = lambda \int u_{n-1}(x+z, t) nu(dz)`. The iterates increase to
//! the solution of the full problem and their boundaries decrease.

use serde::{Deserialize, Serialize};

use crate::boundary::{extract_boundary, BoundaryCurve, ExtractionMethod};
use crate::error::{Error, Result};
use crate::model::{drift_mu, JumpLaw, MarketParams};
use crate::scalar::Real;
use crate::solver::{JumpOperator, JumpTerm, March, Scheme, SolutionSurface, SolverOptions, SurfaceKind};

#[derive(Debug, Clone)]
pub struct IterationTrace<T> {
    /// `u_1 .. u_N`.
    pub surfaces: Vec<SolutionSurface<T>>,
    /// Mask-edge boundaries of the iterates.
    pub boundaries: Vec<BoundaryCurve<T>>,
    /// `||u_n - u_{n-1}||_inf` for `n = 1..=N`.
    pub sup_diffs: Vec<T>,
    /// Largest decrease `max(u_{n-1} - u_n)` for `n = 1..=N` (0 when monotone).
    pub monotonicity_violations: Vec<T>,
    /// Iterate index `n` at which the sup difference fell below the tolerance.
    pub converged_at: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions<T> {
    pub n_max: usize,
    /// Absolute sup-norm tolerance.
    pub tol: T,
    pub scheme: Scheme,
}

impl<T: Real> IterateOptions<T> {
    /// `tol = 1e-6 K`, `n_max = 50`, penalty scheme.
    pub fn for_strike(strike: T) -> Self {
        Self { n_max: 50, tol: T::lit(1e-6) * strike, scheme: Scheme::Penalty }
    }
}

fn sup_diff<T: Real>(a: &[T], b: &[T]) -> (T, T) {
    let mut sup = T::zero();
    let mut drop = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        sup = sup.max((x - y).abs());
        drop = drop.max(y - x);
    }
    (sup, drop)
}

pub fn iterate<T: Real>(
    params: &MarketParams<T>,
    law: &JumpLaw<T>,
    grid: &crate::solver::Grid<T>,
    opts: &IterateOptions<T>,
    solver: &SolverOptions<T>,
) -> Result<IterationTrace<T>> {
    if opts.n_max == 0 {
        return Err(Error::param("n_max", "need at least one iterate"));
    }
    params.validate()?;
    grid.check_brackets(params.log_strike())?;
    let mu = drift_mu(params, law)?;
    let k = params.strike;
    let op = if params.lambda > T::zero() { Some(JumpOperator::new(grid, law, solver.n_quad, solver.tail_width, k)?) } else { None };
    let nc = grid.n_cols();
    let payoff: Vec<T> = (0..nc).map(|i| params.payoff(grid.x(i))).collect();
    let mut prev: Vec<T> = payoff.iter().copied().cycle().take(nc * (grid.nt + 1)).collect();
    let xmin = grid.x_min;
    let left = move |_t: T| k - xmin.exp();

    let mut trace =
        IterationTrace { surfaces: Vec::new(), boundaries: Vec::new(), sup_diffs: Vec::new(), monotonicity_violations: Vec::new(), converged_at: None };
    for n in 1..=opts.n_max {
        let frozen = &prev;
        let source = |level: usize, out: &mut [T]| -> Result<()> {
            match &op {
                Some(op) => {
                    op.apply(&frozen[level * nc..(level + 1) * nc], grid.t(level), out);
                    out.iter_mut().for_each(|v| *v *= params.lambda);
                }
                None => out.iter_mut().for_each(|v| *v = T::zero()),
            }
            Ok(())
        };
        let march = March { params, grid, opts: solver, mu, scheme: Some(opts.scheme), jump: JumpTerm::Frozen(&source), left_bc: &left };
        let u = march.run()?;
        let (sup, drop) = sup_diff(&u, &prev);
        if drop > T::lit(10.0) * opts.tol {
            return Err(Error::NonMonotone { iterate: n, violation: drop.as_f64() });
        }
        let surface =
            SolutionSurface::assemble(*grid, params.clone(), law.clone(), Some(opts.scheme), SurfaceKind::American, u, solver.contact_tol * k);
        trace.boundaries.push(extract_boundary(&surface, ExtractionMethod::MaskEdge)?);
        trace.sup_diffs.push(sup);
        trace.monotonicity_violations.push(drop);
        log::debug!("iterate {n}: sup diff {sup}");
        prev.clone_from(&surface.u);
        trace.surfaces.push(surface);
        if sup < opts.tol {
            trace.converged_at = Some(n);
            break;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnLimitReport<T> {
    pub target: T,
    pub t_small: T,
    pub tolerance: T,
    /// `|b_n(t_small) - target|` per iterate (`None` if the level was flagged).
    pub deviations: Vec<Option<T>>,
    pub passed: bool,
}

/// `|b_n(5 dt) - min(log K, B0)| <= 3 dx` for every iterate.
pub fn check_bn_limit<T: Real>(trace: &IterationTrace<T>, target: T) -> Result<BnLimitReport<T>> {
    let first = trace.surfaces.first().ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
    let g = &first.grid;
    let level = 5;
    let tolerance = T::lit(3.0) * g.dx;
    let deviations: Vec<Option<T>> = trace.boundaries.iter().map(|c| c.at_level(level).map(|b| (b - target).abs())).collect();
    let passed = deviations.iter().all(|d| d.is_some_and(|d| d <= tolerance));
    Ok(BnLimitReport { target, t_small: g.t(level), tolerance, deviations, passed })
}
