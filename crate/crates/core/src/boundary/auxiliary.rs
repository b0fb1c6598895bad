//! The auxiliary functions `J0(x)`, `J(x, t)` and the level curve `B(t)`.

use crate::error::{Error, Result};
use crate::model::{compute_xi, j_strictly_increasing_guaranteed, JumpLaw, MarketParams};
use crate::scalar::Real;
use crate::solver::{JumpOperator, SolutionSurface, SolverOptions};

/// `J0(x) = q e^x - r K + lambda E[(e^{x+Z} - K)^+]`.
pub fn j0_eval<T: Real>(x: T, params: &MarketParams<T>, law: &JumpLaw<T>) -> T {
    let jump = if params.lambda > T::zero() { params.lambda * law.call_expectation(x, params.strike) } else { T::zero() };
    params.q * x.exp() - params.r * params.strike + jump
}

/// Bisection for an increasing function, expanding the bracket around `start`.
pub(crate) fn increasing_root<T: Real>(f: impl Fn(T) -> T, start: T, tol: T, what: &str) -> Result<T> {
    let mut width = T::one();
    let (mut lo, mut hi) = (start - width, start + width);
    let mut expansions = 0;
    while f(lo) > T::zero() || f(hi) < T::zero() {
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NoRoot(format!("{what}: no sign change after 60 bracket expansions")));
        }
        width = width + width;
        if f(lo) > T::zero() {
            lo = start - width;
        }
        if f(hi) < T::zero() {
            hi = start + width;
        }
    }
    bisect(&f, lo, hi, tol)
}

pub(crate) fn bisect<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let half = T::lit(0.5);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = half * (lo + hi);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(half * (lo + hi))
}

/// Root `B0` of `J0`. Requires `J0` to be strictly increasing.
pub fn solve_b0<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>) -> Result<T> {
    if !j_strictly_increasing_guaranteed(params, law) {
        return Err(Error::NoRoot("J0 is not strictly increasing (q = 0 and no upward jumps); lim J0 = -rK < 0".into()));
    }
    increasing_root(|x| j0_eval(x, params, law), params.log_strike(), T::lit(1e-10), "B0")
}

/// `J(x, t_n) = q e^x - r K + lambda (\int u(x+z, t_n) nu(dz) + xi e^x - K)` on a surface.
pub struct AuxiliaryJ<'a, T> {
    surface: &'a SolutionSurface<T>,
    op: Option<JumpOperator<T>>,
    xi: T,
}

impl<'a, T: Real> AuxiliaryJ<'a, T> {
    pub fn new(surface: &'a SolutionSurface<T>, opts: &SolverOptions<T>) -> Result<Self> {
        let p = &surface.params;
        let xi = compute_xi(&surface.law)?;
        let op = if p.lambda > T::zero() {
            Some(JumpOperator::new(&surface.grid, &surface.law, opts.n_quad, opts.tail_width, p.strike)?)
        } else {
            None
        };
        Ok(Self { surface, op, xi })
    }

    /// `\int u(x_i + z, t_n) nu(dz)` at every node of level `n` (zeros when `lambda = 0`).
    pub fn integral_row(&self, n: usize) -> Vec<T> {
        match &self.op {
            Some(op) => op.apply_vec(self.surface.row(n), self.surface.grid.t(n)),
            None => vec![T::zero(); self.surface.grid.n_cols()],
        }
    }

    /// `J(x, t_n)` from a precomputed [`Self::integral_row`].
    pub fn eval_with(&self, integral: &[T], x: T) -> T {
        let p = &self.surface.params;
        let g = &self.surface.grid;
        let base = p.q * x.exp() - p.r * p.strike;
        if p.lambda == T::zero() {
            return base;
        }
        let int = JumpOperator::apply_at(integral, g.x_min, g.dx, x);
        base + p.lambda * (int + self.xi * x.exp() - p.strike)
    }

    pub fn eval(&self, x: T, n: usize) -> T {
        self.eval_with(&self.integral_row(n), x)
    }

    /// `B(t_n)`: `None` when `J(., t_n) < 0` on the whole search range (`B = +inf`).
    /// Without jumps the root is analytic in spirit and is bracketed without the grid.
    pub fn level_b(&self, integral: &[T], tol: T) -> Result<Option<T>> {
        let p = &self.surface.params;
        let g = &self.surface.grid;
        let f = |x: T| self.eval_with(integral, x);
        if p.lambda == T::zero() {
            if p.q == T::zero() {
                return Ok(None);
            }
            return increasing_root(f, p.log_strike(), tol, "B(t)").map(Some);
        }
        if f(g.x_max) < T::zero() {
            return Ok(None);
        }
        if f(g.x_min) >= T::zero() {
            return Ok(Some(g.x_min));
        }
        bisect(&f, g.x_min, g.x_max, tol).map(Some)
    }
}

/// `(t_n, B(t_n))` for every level `n >= 1`; `None` encodes `B = +inf`.
pub fn level_curve_b<T: Real>(surface: &SolutionSurface<T>, opts: &SolverOptions<T>) -> Result<Vec<(T, Option<T>)>> {
    let aux = AuxiliaryJ::new(surface, opts)?;
    (1..=surface.grid.nt)
        .map(|n| {
            let row = aux.integral_row(n);
            Ok((surface.grid.t(n), aux.level_b(&row, T::lit(1e-10))?))
        })
        .collect()
}
