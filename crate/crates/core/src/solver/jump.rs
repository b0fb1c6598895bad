//! Discrete jump integral `u -> \int u(x+z, t) nu(dz)` on a uniform grid.
//!
//! Rows are extended to a piecewise-linear function, so the operator is a
//! convolution with hat-function weights `W_m = \int hat_m(z) nu(dz)` on the
//! offsets `m * dx`. Off-grid nodes take their value from a tail extension.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::model::JumpLaw;
use crate::scalar::Real;
use crate::solver::Grid;

/// Largest mass allowed outside the quadrature window before renormalization.
pub const MAX_TRUNCATED_MASS: f64 = 1e-6;

/// How a row is continued beyond `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailExtension<T> {
    /// `K - e^x` below the grid, 0 above (American put).
    Put { strike: T },
    /// `K e^{-rt} - e^{x - qt}` below the grid, 0 above (European put).
    Forward { strike: T, r: T, q: T },
    /// `e^x` on both sides.
    Exponential,
    Zero,
}

impl<T: Real> TailExtension<T> {
    fn below(&self, x: T, t: T) -> T {
        match *self {
            TailExtension::Put { strike } => strike - x.exp(),
            TailExtension::Forward { strike, r, q } => strike * (-r * t).exp() - (x - q * t).exp(),
            TailExtension::Exponential => x.exp(),
            TailExtension::Zero => T::zero(),
        }
    }

    fn above(&self, x: T) -> T {
        match *self {
            TailExtension::Exponential => x.exp(),
            _ => T::zero(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JumpOperator<T> {
    /// Offset (in nodes) of `weights[0]`.
    offset_lo: isize,
    weights: Vec<T>,
    x_min: T,
    dx: T,
    n_cols: usize,
    tail: TailExtension<T>,
    truncated_mass: f64,
}

fn resolution_scale<T: Real>(law: &JumpLaw<T>) -> Option<f64> {
    match law {
        JumpLaw::Merton { std, .. } => Some(std.as_f64()),
        JumpLaw::Kou { eta1, eta2, .. } => Some(1.0 / eta1.as_f64().max(eta2.as_f64())),
        JumpLaw::Discrete { .. } => None,
    }
}

/// Hat weights for `law` on offsets `m * dx`. Returns `(offset_lo, weights, truncated_mass)`.
pub fn hat_weights<T: Real>(law: &JumpLaw<T>, dx: f64, n_quad: usize, tail_width: f64) -> Result<(isize, Vec<f64>, f64)> {
    law.validate()?;
    if let JumpLaw::Discrete { points } = law {
        let zs: Vec<f64> = points.iter().map(|p| p.0.as_f64()).collect();
        let lo = zs.iter().map(|z| (z / dx).floor() as isize).min().unwrap_or(0);
        let hi = zs.iter().map(|z| (z / dx).floor() as isize + 1).max().unwrap_or(0);
        let mut w = vec![0.0; (hi - lo + 1) as usize];
        for &(z, mass) in points {
            let s = z.as_f64() / dx;
            let m = s.floor();
            let theta = s - m;
            let k = (m as isize - lo) as usize;
            w[k] += mass.as_f64() * (1.0 - theta);
            w[k + 1] += mass.as_f64() * theta;
        }
        return Ok((lo, w, 0.0));
    }
    let (wlo, whi) = law.window(T::lit(tail_width));
    let lo = (wlo.as_f64() / dx).floor() as isize;
    let hi = (whi.as_f64() / dx).ceil() as isize;
    let scale = resolution_scale(law).expect("density law");
    let sub = ((dx / (scale / 4.0)).ceil() as usize).max(1);
    let h = dx / sub as f64;
    let rule = GaussLegendre::new(NonZeroUsize::new(n_quad.max(1)).expect("n_quad >= 1"));
    let dens = |z: f64| law.density(T::lit(z)).expect("density law").as_f64();
    let mut w = vec![0.0; (hi - lo + 1) as usize];
    for m in lo..hi {
        let k = (m - lo) as usize;
        let left = m as f64 * dx;
        let (mut to_left, mut to_right) = (0.0, 0.0);
        for s in 0..sub {
            let a = left + s as f64 * h;
            to_right += rule.integrate(a, a + h, |z| dens(z) * (z - left) / dx);
            to_left += rule.integrate(a, a + h, |z| dens(z) * (1.0 - (z - left) / dx));
        }
        w[k] += to_left;
        w[k + 1] += to_right;
    }
    let total: f64 = w.iter().sum();
    Ok((lo, w, 1.0 - total))
}

impl<T: Real> JumpOperator<T> {
    /// Builds the operator on `grid` with the put tail extension.
    pub fn new(grid: &Grid<T>, law: &JumpLaw<T>, n_quad: usize, tail_width: T, strike: T) -> Result<Self> {
        let dx = grid.dx.as_f64();
        let (offset_lo, raw, truncated_mass) = hat_weights(law, dx, n_quad, tail_width.as_f64())?;
        if truncated_mass.abs() > MAX_TRUNCATED_MASS {
            return Err(Error::Coverage { truncated: truncated_mass });
        }
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| T::lit(w / total)).collect();
        Ok(Self {
            offset_lo,
            weights,
            x_min: grid.x_min,
            dx: grid.dx,
            n_cols: grid.n_cols(),
            tail: TailExtension::Put { strike },
            truncated_mass,
        })
    }

    pub fn with_tail(mut self, tail: TailExtension<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn tail(&self) -> TailExtension<T> {
        self.tail
    }

    /// Mass outside the quadrature window before renormalization.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// `(offset, weight)` pairs after normalization.
    pub fn stencil(&self) -> impl Iterator<Item = (isize, T)> + '_ {
        self.weights.iter().enumerate().map(move |(k, &w)| (self.offset_lo + k as isize, w))
    }

    fn offset_hi(&self) -> isize {
        self.offset_lo + self.weights.len() as isize - 1
    }

    /// Row padded with tail values so every stencil reads in range.
    /// Index `j` of the result corresponds to grid node `j + pad_lo`.
    fn extended(&self, row: &[T], t: T) -> (isize, Vec<T>) {
        let pad_lo = self.offset_lo.min(0);
        let pad_hi = self.offset_hi().max(0) + 1;
        let len = (self.n_cols as isize + pad_hi - pad_lo) as usize;
        let mut e = Vec::with_capacity(len);
        for j in pad_lo..pad_lo + len as isize {
            let x = self.x_min + T::lit(j as f64) * self.dx;
            e.push(if j < 0 {
                self.tail.below(x, t)
            } else if j as usize >= self.n_cols {
                self.tail.above(x)
            } else {
                row[j as usize]
            });
        }
        (pad_lo, e)
    }

    /// `out[i] = \int U(x_i + z) nu(dz)` for every node of `row`.
    pub fn apply(&self, row: &[T], t: T, out: &mut [T]) {
        assert_eq!(row.len(), self.n_cols);
        let (pad_lo, e) = self.extended(row, t);
        let base = (self.offset_lo - pad_lo) as usize;
        for (i, o) in out.iter_mut().enumerate().take(self.n_cols) {
            let seg = &e[i + base..i + base + self.weights.len()];
            *o = seg.iter().zip(&self.weights).map(|(&a, &w)| a * w).sum();
        }
    }

    pub fn apply_vec(&self, row: &[T], t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_cols];
        self.apply(row, t, &mut out);
        out
    }

    /// The integral at an arbitrary `x` in the grid range: linear interpolation
    /// of the node values, which is exact for the piecewise-linear extension.
    pub fn apply_at(applied: &[T], x_min: T, dx: T, x: T) -> T {
        let n = applied.len();
        let s = ((x - x_min) / dx).max(T::zero()).min(T::lit((n - 1) as f64));
        let j = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let th = s - T::lit(j as f64);
        (T::one() - th) * applied[j] + th * applied[j + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_point_split_between_neighbours() {
        let law = JumpLaw::Discrete { points: vec![(0.25, 0.5), (-0.1, 0.5)] };
        let (lo, w, tm) = hat_weights(&law, 0.1, 4, 8.0).unwrap();
        assert_eq!(tm, 0.0);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        // mean is preserved by linear splitting
        let mean: f64 = w.iter().enumerate().map(|(k, &v)| v * (lo + k as isize) as f64 * 0.1).sum();
        assert!((mean - 0.075).abs() < 1e-15);
    }

    #[test]
    fn hat_weights_preserve_mean_merton() {
        let law = JumpLaw::Merton { mean: -0.1, std: 0.2 };
        let dx = 0.02;
        let (lo, w, tm) = hat_weights(&law, dx, 8, 8.0).unwrap();
        assert!(tm.abs() < 1e-12);
        let mean: f64 = w.iter().enumerate().map(|(k, &v)| v * (lo + k as isize) as f64 * dx).sum();
        assert!((mean + 0.1).abs() < 1e-12);
    }

    #[test]
    fn narrow_window_is_a_coverage_error() {
        let grid = Grid::new(-2.0, 2.0, 99, 1.0, 16).unwrap();
        let law = JumpLaw::Merton { mean: 0.0, std: 0.3 };
        let err = JumpOperator::new(&grid, &law, 8, 3.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Coverage { .. }));
    }
}
