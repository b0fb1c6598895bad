use serde::{Deserialize, Serialize};

use crate::model::{JumpLaw, MarketParams};
use crate::scalar::Real;
use crate::solver::{Grid, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    American,
    European,
}

/// Option values `u(x, t)` on the whole grid, `t` = time to maturity.
#[derive(Debug, Clone)]
pub struct SolutionSurface<T> {
    pub grid: Grid<T>,
    pub params: MarketParams<T>,
    pub law: JumpLaw<T>,
    /// `None` for European surfaces (no obstacle).
    pub scheme: Option<Scheme>,
    pub kind: SurfaceKind,
    /// Row-major, `(nt + 1) x (nx + 2)`.
    pub u: Vec<T>,
    /// `u - g <= contact_tol` and `x <= log K`. Always false for European surfaces.
    pub exercised: Vec<bool>,
    /// Absolute contact tolerance used for the mask.
    pub contact_tol: T,
}

impl<T: Real> SolutionSurface<T> {
    pub(crate) fn assemble(
        grid: Grid<T>,
        params: MarketParams<T>,
        law: JumpLaw<T>,
        scheme: Option<Scheme>,
        kind: SurfaceKind,
        u: Vec<T>,
        contact_tol: T,
    ) -> Self {
        let nc = grid.n_cols();
        let lk = params.log_strike();
        let mut exercised = vec![false; u.len()];
        if kind == SurfaceKind::American {
            for (k, flag) in exercised.iter_mut().enumerate() {
                let x = grid.x(k % nc);
                *flag = x <= lk + grid.dx * T::lit(1e-9) && u[k] - params.payoff(x) <= contact_tol;
            }
        }
        Self { grid, params, law, scheme, kind, u, exercised, contact_tol }
    }

    pub fn n_levels(&self) -> usize {
        self.grid.nt + 1
    }

    pub fn row(&self, n: usize) -> &[T] {
        let nc = self.grid.n_cols();
        &self.u[n * nc..(n + 1) * nc]
    }

    pub fn mask_row(&self, n: usize) -> &[bool] {
        let nc = self.grid.n_cols();
        &self.exercised[n * nc..(n + 1) * nc]
    }

    pub fn value(&self, n: usize, i: usize) -> T {
        self.u[n * self.grid.n_cols() + i]
    }

    pub fn payoff_row(&self) -> Vec<T> {
        (0..self.grid.n_cols()).map(|i| self.params.payoff(self.grid.x(i))).collect()
    }

    /// Linear interpolation of row `n` at log-price `x` (clamped to the grid).
    pub fn value_at(&self, n: usize, x: T) -> T {
        let row = self.row(n);
        let g = &self.grid;
        let s = ((x - g.x_min) / g.dx).max(T::zero()).min(T::lit((g.n_cols() - 1) as f64));
        let j = s.floor().to_usize().unwrap_or(0).min(g.n_cols() - 2);
        let th = s - T::lit(j as f64);
        (T::one() - th) * row[j] + th * row[j + 1]
    }

    /// Option value at spot `s` and time to maturity `t_n`.
    pub fn price(&self, spot: T, n: usize) -> T {
        self.value_at(n, spot.ln())
    }

    /// Price at the full maturity.
    pub fn price_at_maturity(&self, spot: T) -> T {
        self.price(spot, self.grid.nt)
    }
}
