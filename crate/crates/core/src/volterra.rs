//! Volterra equation for `v(t) = dw/dx(b(t)+, t)`, `w = du/dt`, with constant volatility.
//!
//! `w` solves `L_D w = h` on `x > b(t)` with `w(b(t), t) = 0`, where
//! `L_D = d/dt - (1/2) sigma^2 d2/dx2 - (mu - sigma^2/2) d/dx + (r + lambda)` and
//! `h = lambda \int w(x+z, t) nu(dz)`. Differentiating the Green representation
//! and passing to the boundary gives
//!
//! `c v(t) = -\int_{t0}^t rho(s) dG/dx(b(t),t; b(s),s) ds + N1(t) + N2(t)`,
//! `rho = (1/2) sigma^2 v`.
//!
//! The single-layer jump for a kernel with diffusion `sigma^2/2` is `rho/sigma^2 = v/2`,
//! which gives `c = 1/2`. The coefficient `1 + sigma^2/4` is available as
//! [`JumpCoefficient::AsPrinted`] for comparison.

use serde::{Deserialize, Serialize};

use crate::boundary::{local_derivative_at, time_derivative_row, AuxiliaryJ, BoundaryCurve};
use crate::error::{Error, Result};
use crate::model::drift_mu;
use crate::scalar::{norm_cdf, Real};
use crate::solver::{JumpOperator, SolutionSurface, SolverOptions, TailExtension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpCoefficient {
    /// `1/2`, from the single-layer jump relation.
    Derived,
    /// `1 + sigma^2/4`.
    AsPrinted,
}

/// Green function of `L_D` on the whole line with constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernel<T> {
    pub sigma: T,
    /// `mu - sigma^2/2`.
    pub drift: T,
    /// `r + lambda`.
    pub decay: T,
}

impl<T: Real> GreenKernel<T> {
    fn center(&self, x: T, y: T, tau: T) -> T {
        x - y + self.drift * tau
    }

    pub fn g(&self, x: T, t: T, y: T, s: T) -> T {
        let tau = t - s;
        let z = self.center(x, y, tau);
        let var = self.sigma * self.sigma * tau;
        (-self.decay * tau).exp() * (-(z * z) / (var + var)).exp() / (T::lit(2.0) * T::PI() * var).sqrt()
    }

    /// `dG/dx = -dG/dy`.
    pub fn dx_g(&self, x: T, t: T, y: T, s: T) -> T {
        let tau = t - s;
        -self.center(x, y, tau) / (self.sigma * self.sigma * tau) * self.g(x, t, y, s)
    }

    /// `\int_{ya}^{yb} G(x, t; y, s) dy`.
    pub fn mass(&self, x: T, t: T, ya: T, yb: T, s: T) -> T {
        let tau = t - s;
        let sd = self.sigma * tau.sqrt();
        let m = x + self.drift * tau;
        (-self.decay * tau).exp() * (norm_cdf((yb - m) / sd) - norm_cdf((ya - m) / sd))
    }

    /// `\int_{ya}^{yb} f(y) dG/dx(x,t;y,s) dy` for `f` linear with `f(ya) = fa`, `f(yb) = fb`.
    /// Integration by parts: `-[f G] + f' \int G`.
    #[allow(clippy::too_many_arguments)]
    pub fn dx_linear(&self, x: T, t: T, s: T, ya: T, yb: T, fa: T, fb: T) -> T {
        let slope = (fb - fa) / (yb - ya);
        -(fb * self.g(x, t, yb, s) - fa * self.g(x, t, ya, s)) + slope * self.mass(x, t, ya, yb, s)
    }

    /// `\int_{b}^{inf} f(y) dG/dx dy` for `f` piecewise linear on the uniform nodes
    /// `x_min + i dx`, with value `f_b` at `b` and zero beyond the last node.
    #[allow(clippy::too_many_arguments)]
    pub fn dx_half_line(&self, x: T, t: T, s: T, b: T, f_b: T, x_min: T, dx: T, f: &[T]) -> T {
        let sidx = ((b - x_min) / dx).floor().to_usize().unwrap_or(0) + 1;
        if sidx >= f.len() {
            return T::zero();
        }
        let node = |i: usize| x_min + T::from_usize_lossy(i) * dx;
        let mut acc = if node(sidx) - b > dx * T::lit(1e-9) { self.dx_linear(x, t, s, b, node(sidx), f_b, f[sidx]) } else { T::zero() };
        for i in sidx..f.len() - 1 {
            acc += self.dx_linear(x, t, s, node(i), node(i + 1), f[i], f[i + 1]);
        }
        acc
    }
}

/// Product-integration weights of `\int_{t_i}^{t_{i+1}} (t_k - s)^{-1/2} phi(s) ds`
/// for `phi` linear between its end values: `(A, B)` multiply `phi(t_i)`, `phi(t_{i+1})`.
fn sqrt_weights<T: Real>(tau_i: T, tau_next: T) -> (T, T) {
    let two = T::lit(2.0);
    let h = tau_i - tau_next;
    let i0 = two * (tau_i.sqrt() - tau_next.sqrt());
    let i1 = (tau_i * i0 - two / T::lit(3.0) * (tau_i * tau_i.sqrt() - tau_next * tau_next.sqrt())) / h;
    (i0 - i1, i1)
}

/// Discretized Volterra problem on the time nodes `times[0] = t0 < ... < times[M]`.
pub struct VolterraProblem<'a, T> {
    pub kernel: GreenKernel<T>,
    pub times: &'a [T],
    pub boundary: &'a [T],
    pub x_min: T,
    pub dx: T,
    /// `w(., t0)` on the nodes.
    pub w0: &'a [T],
    /// `h(., times[i])` on the nodes.
    pub h: &'a [Vec<T>],
    pub coefficient: JumpCoefficient,
}

impl<T: Real> VolterraProblem<'_, T> {
    fn interp(&self, row: &[T], x: T) -> T {
        JumpOperator::apply_at(row, self.x_min, self.dx, x)
    }

    /// Returns `v(times[i])` for every node.
    pub fn solve(&self) -> Result<Vec<T>> {
        let m = self.times.len();
        if m < 2 || self.boundary.len() != m || self.h.len() != m {
            return Err(Error::InsufficientData("Volterra problem needs matching times, boundary and h".into()));
        }
        let kern = &self.kernel;
        let half = T::lit(0.5);
        let a = half * kern.sigma * kern.sigma;
        let lhs = match self.coefficient {
            JumpCoefficient::Derived => half,
            JumpCoefficient::AsPrinted => T::one() + half * a,
        };
        let t0 = self.times[0];
        let b0 = self.boundary[0];
        let w0_at = |b: T| if b <= b0 { T::zero() } else { self.interp(self.w0, b) };
        let mut v = Vec::with_capacity(m);
        let first = local_derivative_at(self.x_min, self.dx, self.w0, b0).map_or(T::zero(), |d| d.0);
        v.push(first);
        // sqrt(tau) * I(s) at tau -> 0 is h(b) / (sigma sqrt(2 pi))
        let edge = T::one() / (kern.sigma * (T::lit(2.0) * T::PI()).sqrt());
        for k in 1..m {
            let (tk, bk) = (self.times[k], self.boundary[k]);
            let n1 = kern.dx_half_line(bk, tk, t0, b0, w0_at(b0), self.x_min, self.dx, self.w0);
            let mut n2 = T::zero();
            let mut memory = T::zero();
            let mut diag = T::zero();
            let mut prev_i = T::zero();
            for i in 0..k {
                let (ti, tn) = (self.times[i], self.times[i + 1]);
                let (tau_i, tau_n) = (tk - ti, tk - tn);
                let (wa, wb) = sqrt_weights(tau_i, tau_n);
                // source term, product trapezoid on sqrt(tau) * I(s)
                let ii = if i == 0 {
                    let hb = self.interp(&self.h[0], self.boundary[0]);
                    tau_i.sqrt() * kern.dx_half_line(bk, tk, ti, self.boundary[0], hb, self.x_min, self.dx, &self.h[0])
                } else {
                    prev_i
                };
                let i_next = if i + 1 == k {
                    edge * self.interp(&self.h[k], bk)
                } else {
                    let bn = self.boundary[i + 1];
                    let hb = self.interp(&self.h[i + 1], bn);
                    tau_n.sqrt() * kern.dx_half_line(bk, tk, tn, bn, hb, self.x_min, self.dx, &self.h[i + 1])
                };
                n2 += wa * ii + wb * i_next;
                prev_i = i_next;
                // memory term with sqrt(tau) * rho dG/dx frozen at the midpoint
                let sm = half * (ti + tn);
                let bm = half * (self.boundary[i] + self.boundary[i + 1]);
                let kt = (tk - sm).sqrt() * a * kern.dx_g(bk, tk, bm, sm);
                memory += wa * kt * v[i];
                if i + 1 == k {
                    diag = wb * kt;
                } else {
                    memory += wb * kt * v[i + 1];
                }
            }
            let denom = lhs + diag;
            let vk = (n1 + n2 - memory) / denom;
            if !vk.is_finite() {
                return Err(Error::KernelDivergence { level: k });
            }
            v.push(vk);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraResult<T> {
    pub levels: Vec<usize>,
    pub t: Vec<T>,
    pub v: Vec<T>,
    /// One-sided `d(du/dt)/dx` at `b(t)+` from the surface.
    pub v_fd: Vec<T>,
    pub bprime_from_v: Vec<T>,
    pub bprime_fd: Vec<Option<T>>,
}

/// Solves the Volterra equation on the surface levels with `t >= t0`.
pub fn solve_volterra<T: Real>(
    curve: &BoundaryCurve<T>,
    surface: &SolutionSurface<T>,
    t0: T,
    solver: &SolverOptions<T>,
    coefficient: JumpCoefficient,
    fd_half_width: usize,
) -> Result<VolterraResult<T>> {
    let p = &surface.params;
    let g = &surface.grid;
    let sigma = p.sigma.constant().ok_or_else(|| Error::Unsupported("the Volterra check needs constant volatility".into()))?;
    if t0 < T::lit(10.0) * g.dt - T::lit(1e-12) {
        return Err(Error::param("t0", "must be at least 10 dt"));
    }
    let mu = drift_mu(p, &surface.law)?;
    let kernel = GreenKernel { sigma, drift: mu - T::lit(0.5) * sigma * sigma, decay: p.r + p.lambda };
    let start = curve.t.partition_point(|&t| t < t0 - T::lit(1e-12) * g.maturity);
    let levels = curve.levels[start..].to_vec();
    if levels.len() < 3 || levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InsufficientData("boundary curve must cover consecutive levels after t0".into()));
    }
    let times = curve.t[start..].to_vec();
    let boundary = curve.b[start..].to_vec();
    let w_rows: Vec<Vec<T>> = levels.iter().map(|&n| time_derivative_row(surface, n)).collect();
    let op = if p.lambda > T::zero() {
        Some(JumpOperator::new(g, &surface.law, solver.n_quad, solver.tail_width, p.strike)?.with_tail(TailExtension::Zero))
    } else {
        None
    };
    let h: Vec<Vec<T>> = levels
        .iter()
        .zip(&w_rows)
        .map(|(&n, w)| match &op {
            Some(op) => op.apply_vec(w, g.t(n)).into_iter().map(|v| v * p.lambda).collect(),
            None => vec![T::zero(); g.n_cols()],
        })
        .collect();
    let problem = VolterraProblem { kernel, times: &times, boundary: &boundary, x_min: g.x_min, dx: g.dx, w0: &w_rows[0], h: &h, coefficient };
    let v = problem.solve()?;

    let aux = AuxiliaryJ::new(surface, solver)?;
    let half = T::lit(0.5);
    let hw = fd_half_width.max(1);
    let mut v_fd = Vec::with_capacity(v.len());
    let mut bprime_from_v = Vec::with_capacity(v.len());
    let mut bprime_fd = Vec::with_capacity(v.len());
    for (k, (&n, &b)) in levels.iter().zip(&boundary).enumerate() {
        v_fd.push(local_derivative_at(g.x_min, g.dx, &w_rows[k], b).map_or(T::nan(), |d| d.0));
        let den = -aux.eval(b, n);
        bprime_from_v.push(-half * sigma * sigma * v[k] / den);
        let kk = start + k;
        bprime_fd.push(
            (kk >= hw && kk + hw < curve.len() && curve.levels[kk + hw] - curve.levels[kk - hw] == 2 * hw)
                .then(|| (curve.b[kk + hw] - curve.b[kk - hw]) / (curve.t[kk + hw] - curve.t[kk - hw])),
        );
    }
    Ok(VolterraResult { levels, t: times, v, v_fd, bprime_from_v, bprime_fd })
}
