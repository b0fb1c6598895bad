//! Tridiagonal solves and the two obstacle solvers built on them.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rows `lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i]`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct TriSystem<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> TriSystem<T> {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![T::zero(); n], diag: vec![T::zero(); n], upper: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A u`.
    pub fn mul(&self, u: &[T], out: &mut [T]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * u[i];
            if i > 0 {
                s += self.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * u[i + 1];
            }
            out[i] = s;
        }
    }

    /// Thomas algorithm with an optional extra diagonal term.
    pub fn solve_shifted(&self, shift: Option<&[T]>, rhs: &[T], out: &mut [T], scratch: &mut Vec<T>) -> Result<()> {
        let n = self.len();
        scratch.clear();
        scratch.resize(n, T::zero());
        let d = |i: usize| self.diag[i] + shift.map_or(T::zero(), |s| s[i]);
        let tiny = T::min_positive_value().sqrt();
        let mut beta = d(0);
        if beta.abs() < tiny {
            return Err(Error::SingularSystem { row: 0 });
        }
        out[0] = rhs[0] / beta;
        for i in 1..n {
            scratch[i] = self.upper[i - 1] / beta;
            beta = d(i) - self.lower[i] * scratch[i];
            if beta.abs() < tiny {
                return Err(Error::SingularSystem { row: i });
            }
            out[i] = (rhs[i] - self.lower[i] * out[i - 1]) / beta;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = out[i + 1];
            out[i] -= scratch[i + 1] * next;
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[T], out: &mut [T], scratch: &mut Vec<T>) -> Result<()> {
        self.solve_shifted(None, rhs, out, scratch)
    }
}

/// Projected SOR on the complementarity problem `A u >= b, u >= g, (A u - b)(u - g) = 0`.
/// `u` holds the warm start on entry. Returns the number of sweeps.
pub fn psor<T: Real>(a: &TriSystem<T>, b: &[T], g: &[T], u: &mut [T], omega: T, tol: T, max_sweeps: usize) -> Option<usize> {
    let n = a.len();
    for (ui, gi) in u.iter_mut().zip(g) {
        *ui = ui.max(*gi);
    }
    for sweep in 1..=max_sweeps {
        let mut change = T::zero();
        for i in 0..n {
            let mut s = b[i];
            if i > 0 {
                s -= a.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                s -= a.upper[i] * u[i + 1];
            }
            let gs = s / a.diag[i];
            let new = (u[i] + omega * (gs - u[i])).max(g[i]);
            change = change.max((new - u[i]).abs());
            u[i] = new;
        }
        if change < tol {
            return Some(sweep);
        }
    }
    None
}

/// Semismooth Newton on `A u - b - rho * max(g - u, 0) = 0` (penalty surrogate).
/// `u` holds the warm start on entry. Returns the number of Newton steps.
pub fn penalty_newton<T: Real>(
    a: &TriSystem<T>,
    b: &[T],
    g: &[T],
    u: &mut [T],
    rho: T,
    max_iter: usize,
    scratch: &mut Vec<T>,
) -> Result<Option<usize>> {
    let n = a.len();
    let mut active = vec![false; n];
    let mut shift = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    // status flips within a few ulps of the obstacle are roundoff, not progress
    let ulps = T::epsilon() * T::lit(16.0);
    for it in 1..=max_iter {
        let mut changed = it == 1;
        for i in 0..n {
            let act = g[i] > u[i];
            changed |= act != active[i] && (g[i] - u[i]).abs() > ulps * (g[i].abs() + T::one());
            active[i] = act;
            shift[i] = if act { rho } else { T::zero() };
            rhs[i] = b[i] + shift[i] * g[i];
        }
        if !changed {
            return Ok(Some(it - 1));
        }
        a.solve_shifted(Some(&shift), &rhs, u, scratch)?;
    }
    let settled = (0..n).all(|i| (g[i] > u[i]) == active[i] || (g[i] - u[i]).abs() <= ulps * (g[i].abs() + T::one()));
    Ok(settled.then_some(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> TriSystem<f64> {
        let mut a = TriSystem::zeros(n);
        for i in 0..n {
            a.lower[i] = -1.0;
            a.diag[i] = 2.5 + 0.1 * i as f64;
            a.upper[i] = -1.2;
        }
        a
    }

    #[test]
    fn thomas_solves_exactly() {
        let a = sample(30);
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; 30];
        a.mul(&x, &mut b);
        let mut y = vec![0.0; 30];
        a.solve(&b, &mut y, &mut Vec::new()).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn psor_and_penalty_agree_on_lcp() {
        let a = sample(40);
        let b: Vec<f64> = (0..40).map(|i| 1.0 - 0.08 * i as f64).collect();
        let g: Vec<f64> = (0..40).map(|i| (0.6 - 0.03 * i as f64).max(0.0)).collect();
        let mut u1 = g.clone();
        psor(&a, &b, &g, &mut u1, 1.2, 1e-14, 10_000).unwrap();
        let mut u2 = g.clone();
        penalty_newton(&a, &b, &g, &mut u2, 1e10, 50, &mut Vec::new()).unwrap().unwrap();
        let mut au = vec![0.0; 40];
        a.mul(&u1, &mut au);
        for i in 0..40 {
            assert!(u1[i] >= g[i]);
            assert!(au[i] - b[i] >= -1e-12);
            assert!(((au[i] - b[i]) * (u1[i] - g[i])).abs() < 1e-12);
            assert!((u1[i] - u2[i]).abs() < 1e-8, "{i}: {} vs {}", u1[i], u2[i]);
        }
    }
}
