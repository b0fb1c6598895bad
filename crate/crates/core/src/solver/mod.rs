//! Finite-difference solution of the obstacle problem in `(x, t)`.
//!
//! Each time step is IMEX: diffusion, drift and reaction are implicit through a
//! tridiagonal matrix, and the jump integral is iterated to a fixed point inside
//! the step. The obstacle is handled either by projected SOR or by a penalty
//! term solved with semismooth Newton.

mod jump;
mod surface;
pub mod tridiag;

use serde::{Deserialize, Serialize};

pub use jump::{hat_weights, JumpOperator, TailExtension, MAX_TRUNCATED_MASS};
pub use surface::{SolutionSurface, SurfaceKind};

use crate::error::{Error, Result};
use crate::model::{drift_mu, JumpLaw, MarketParams};
use crate::scalar::Real;
use tridiag::{penalty_newton, psor, TriSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Penalty,
    Psor,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Penalty => "penalty",
            Scheme::Psor => "psor",
        }
    }
}

/// Uniform lattice in log-price and time to maturity.
/// Columns are `x_min + i dx` for `i = 0..=nx+1` (two boundary nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub x_min: T,
    pub x_max: T,
    pub nx: usize,
    pub nt: usize,
    pub dx: T,
    pub dt: T,
    pub maturity: T,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, nx: usize, maturity: T, nt: usize) -> Result<Self> {
        if nx < 16 {
            return Err(Error::param("grid.nx", "need at least 16 interior nodes"));
        }
        if nt < 16 {
            return Err(Error::param("grid.nt", "need at least 16 time steps"));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::param("grid.x_min", "need finite x_min < x_max"));
        }
        if !(maturity.is_finite() && maturity > T::zero()) {
            return Err(Error::param("maturity", "must be > 0"));
        }
        let dx = (x_max - x_min) / T::from_usize_lossy(nx + 1);
        let dt = maturity / T::from_usize_lossy(nt);
        Ok(Self { x_min, x_max, nx, nt, dx, dt, maturity })
    }

    /// Default truncation `log K -+ max(6 sigma sqrt(T), 4 jump_scale)`, shifted by
    /// less than `dx` so that `log K` is a grid node.
    pub fn for_model(params: &MarketParams<T>, law: &JumpLaw<T>, nx: usize, nt: usize) -> Result<Self> {
        let lk = params.log_strike();
        let half = (T::lit(6.0) * params.sigma.scale() * params.maturity.sqrt()).max(T::lit(4.0) * law.jump_scale());
        let dx = (half + half) / T::from_usize_lossy(nx + 1);
        let j = nx.div_ceil(2);
        let x_min = lk - T::from_usize_lossy(j) * dx;
        let x_max = x_min + T::from_usize_lossy(nx + 1) * dx;
        let g = Self::new(x_min, x_max, nx, params.maturity, nt)?;
        g.check_brackets(lk)?;
        Ok(g)
    }

    pub fn check_brackets(&self, log_strike: T) -> Result<()> {
        if self.x_min < log_strike && self.x_max > log_strike {
            Ok(())
        } else {
            Err(Error::param("grid.x_min", "truncation must bracket log K"))
        }
    }

    pub fn n_cols(&self) -> usize {
        self.nx + 2
    }

    pub fn x(&self, i: usize) -> T {
        self.x_min + T::from_usize_lossy(i) * self.dx
    }

    pub fn t(&self, n: usize) -> T {
        T::from_usize_lossy(n) * self.dt
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.n_cols()).map(|i| self.x(i)).collect()
    }

    /// Column index of the node nearest to `x`.
    pub fn nearest(&self, x: T) -> usize {
        let s = ((x - self.x_min) / self.dx).round().max(T::zero());
        s.to_usize().unwrap_or(0).min(self.n_cols() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    /// Inner jump iteration stops when the sup change is below `jump_tol * K`.
    pub jump_tol: T,
    pub max_inner: usize,
    pub psor_omega: T,
    /// PSOR stops when a sweep changes no value by more than `psor_tol * K`.
    pub psor_tol: T,
    pub psor_max_sweeps: usize,
    pub penalty_epsilon: T,
    pub penalty_slack: T,
    pub newton_max: usize,
    /// Gauss-Legendre points per quadrature cell of the jump operator.
    pub n_quad: usize,
    /// Jump window half-width in standard deviations (Merton) or the equivalent tail mass.
    pub tail_width: T,
    /// Contact tolerance of the exercise mask, relative to `K`.
    pub contact_tol: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            jump_tol: T::lit(1e-10),
            max_inner: 200,
            psor_omega: T::lit(1.2),
            psor_tol: T::lit(1e-9),
            psor_max_sweeps: 10_000,
            penalty_epsilon: T::lit(1e-6),
            penalty_slack: T::one(),
            newton_max: 50,
            n_quad: 8,
            tail_width: T::lit(8.0),
            contact_tol: T::lit(1e-8),
        }
    }
}

/// `C_eps = (r + lambda) K + r eps + slack`.
pub fn penalty_constant<T: Real>(params: &MarketParams<T>, epsilon: T, slack: T) -> T {
    (params.r + params.lambda) * params.strike + params.r * epsilon + slack
}

/// How the jump integral enters a step.
pub(crate) enum JumpTerm<'a, T> {
    /// `lambda * J[u]` at the new level, iterated to a fixed point.
    Implicit(&'a JumpOperator<T>),
    /// A frozen source evaluated at level `n` into the given row.
    Frozen(&'a (dyn Fn(usize, &mut [T]) -> Result<()> + 'a)),
    Absent,
}

pub(crate) struct March<'a, T> {
    pub params: &'a MarketParams<T>,
    pub grid: &'a Grid<T>,
    pub opts: &'a SolverOptions<T>,
    pub mu: T,
    pub scheme: Option<Scheme>,
    pub jump: JumpTerm<'a, T>,
    pub left_bc: &'a dyn Fn(T) -> T,
}

impl<T: Real> March<'_, T> {
    pub fn run(&self) -> Result<Vec<T>> {
        let g = self.grid;
        let p = self.params;
        let nc = g.n_cols();
        let nx = g.nx;
        let k = p.strike;
        let lam = p.lambda;
        let dt = g.dt;
        let dx2 = g.dx * g.dx;
        let half = T::lit(0.5);
        let payoff: Vec<T> = (0..nc).map(|i| p.payoff(g.x(i))).collect();
        let obstacle = &payoff[1..=nx];
        let rho = self.scheme.map(|_| dt * penalty_constant(p, self.opts.penalty_epsilon, self.opts.penalty_slack) / self.opts.penalty_epsilon);

        let sig_lo = match &p.sigma {
            crate::model::Volatility::Constant(s) => *s,
            crate::model::Volatility::Surface(s) => s.lower,
        };
        if (self.mu - half * sig_lo * sig_lo).abs() * g.dx > sig_lo * sig_lo {
            log::warn!("Peclet guard: |mu - sigma^2/2| dx exceeds sigma^2; central drift may oscillate");
        }

        let mut u = Vec::with_capacity(nc * (g.nt + 1));
        u.extend_from_slice(&payoff);
        let mut sys = TriSystem::zeros(nx);
        let mut rhs = vec![T::zero(); nx];
        let mut jbuf = vec![T::zero(); nc];
        let mut iter_row = vec![T::zero(); nc];
        let mut new_int = vec![T::zero(); nx];
        let mut scratch = Vec::new();
        let tol = self.opts.jump_tol * k;

        for n in 0..g.nt {
            let t_new = g.t(n + 1);
            let t_mid = g.t(n) + half * dt;
            for i in 0..nx {
                let s = p.sigma.at(g.x(i + 1), t_mid);
                let a = half * s * s;
                let c = self.mu - a;
                sys.lower[i] = -dt * (a / dx2 - c / (g.dx + g.dx));
                sys.diag[i] = T::one() + dt * ((a + a) / dx2 + p.r + lam);
                sys.upper[i] = -dt * (a / dx2 + c / (g.dx + g.dx));
            }
            let prev = &u[n * nc..(n + 1) * nc];
            iter_row.copy_from_slice(prev);
            let left = (self.left_bc)(t_new);
            iter_row[0] = left;
            iter_row[nc - 1] = T::zero();

            match &self.jump {
                JumpTerm::Frozen(f) => {
                    f(n + 1, &mut jbuf)?;
                }
                JumpTerm::Absent => jbuf.iter_mut().for_each(|v| *v = T::zero()),
                JumpTerm::Implicit(_) => {}
            }

            let mut inner = 0;
            loop {
                inner += 1;
                if let JumpTerm::Implicit(op) = &self.jump {
                    op.apply(&iter_row, t_new, &mut jbuf);
                    jbuf.iter_mut().for_each(|v| *v *= lam);
                }
                for i in 0..nx {
                    rhs[i] = prev[i + 1] + dt * jbuf[i + 1];
                }
                rhs[0] -= sys.lower[0] * left;
                new_int.copy_from_slice(&iter_row[1..=nx]);
                match self.scheme {
                    None => sys.solve(&rhs, &mut new_int, &mut scratch)?,
                    Some(Scheme::Psor) => {
                        psor(&sys, &rhs, obstacle, &mut new_int, self.opts.psor_omega, self.opts.psor_tol * k, self.opts.psor_max_sweeps)
                            .ok_or(Error::ObstacleNonConvergence { scheme: "psor", step: n + 1, iterations: self.opts.psor_max_sweeps })?;
                    }
                    Some(Scheme::Penalty) => {
                        penalty_newton(&sys, &rhs, obstacle, &mut new_int, rho.unwrap(), self.opts.newton_max, &mut scratch)?
                            .ok_or(Error::ObstacleNonConvergence { scheme: "penalty", step: n + 1, iterations: self.opts.newton_max })?;
                        // the penalized solution undershoots g by O(eps); project it back
                        for (v, gi) in new_int.iter_mut().zip(obstacle) {
                            *v = v.max(*gi);
                        }
                    }
                }
                let change = new_int.iter().zip(&iter_row[1..=nx]).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
                iter_row[1..=nx].copy_from_slice(&new_int);
                if !matches!(self.jump, JumpTerm::Implicit(_)) || change < tol {
                    break;
                }
                if inner >= self.opts.max_inner {
                    return Err(Error::InnerNonConvergence { step: n + 1, iterations: inner, change: change.as_f64() });
                }
            }
            u.extend_from_slice(&iter_row);
        }
        Ok(u)
    }
}

fn build_operator<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>, grid: &Grid<T>, opts: &SolverOptions<T>) -> Result<Option<JumpOperator<T>>> {
    if params.lambda == T::zero() {
        return Ok(None);
    }
    JumpOperator::new(grid, law, opts.n_quad, opts.tail_width, params.strike).map(Some)
}

/// American put surface.
pub fn solve_pide<T: Real>(
    params: &MarketParams<T>,
    law: &JumpLaw<T>,
    grid: &Grid<T>,
    scheme: Scheme,
    opts: &SolverOptions<T>,
) -> Result<SolutionSurface<T>> {
    params.validate()?;
    grid.check_brackets(params.log_strike())?;
    let mu = drift_mu(params, law)?;
    let op = build_operator(params, law, grid, opts)?;
    let k = params.strike;
    let xmin = grid.x_min;
    let left = move |_t: T| k - xmin.exp();
    let march = March {
        params,
        grid,
        opts,
        mu,
        scheme: Some(scheme),
        jump: op.as_ref().map_or(JumpTerm::Absent, JumpTerm::Implicit),
        left_bc: &left,
    };
    let u = march.run()?;
    Ok(SolutionSurface::assemble(*grid, params.clone(), law.clone(), Some(scheme), SurfaceKind::American, u, opts.contact_tol * k))
}

/// European put surface (no obstacle).
pub fn solve_european_pide<T: Real>(
    params: &MarketParams<T>,
    law: &JumpLaw<T>,
    grid: &Grid<T>,
    opts: &SolverOptions<T>,
) -> Result<SolutionSurface<T>> {
    params.validate()?;
    grid.check_brackets(params.log_strike())?;
    let mu = drift_mu(params, law)?;
    let (k, r, q) = (params.strike, params.r, params.q);
    let op = build_operator(params, law, grid, opts)?.map(|o| o.with_tail(TailExtension::Forward { strike: k, r, q }));
    let xmin = grid.x_min;
    let left = move |t: T| k * (-r * t).exp() - (xmin - q * t).exp();
    let march = March {
        params,
        grid,
        opts,
        mu,
        scheme: None,
        jump: op.as_ref().map_or(JumpTerm::Absent, JumpTerm::Implicit),
        left_bc: &left,
    };
    let u = march.run()?;
    Ok(SolutionSurface::assemble(*grid, params.clone(), law.clone(), None, SurfaceKind::European, u, opts.contact_tol * k))
}
