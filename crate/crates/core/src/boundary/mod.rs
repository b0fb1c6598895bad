//! Exercise-boundary extraction and the regularity lab.

mod auxiliary;
mod regularity;

use serde::{Deserialize, Serialize};

pub use auxiliary::{j0_eval, level_curve_b, solve_b0, AuxiliaryJ};
pub use regularity::{
    anchored_slope_at, bprime_identity, default_fd_half_width, diagnose, expected_b0_limit, holder_exponent, holder_exponent_raw, local_derivative_at, second_derivative_at, smooth_fit_residual,
    time_derivative_row, uxx_gap, BPrimeSample, DiagnoseOptions, DiagnosticsReport, LevelDiagnostics, FIRST_DIAGNOSTIC_LEVEL,
};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solver::{SolutionSurface, SurfaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMethod {
    /// Largest node of the contiguous contact run starting at `x_min`.
    MaskEdge,
    /// Zero of the linear extrapolation of the centered `d(u - g)/dx` from the
    /// continuation side.
    SmoothfitCross,
}

/// Boundary samples `b(t_k)` in log-price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve<T> {
    /// Surface level of each sample.
    pub levels: Vec<usize>,
    pub t: Vec<T>,
    pub b: Vec<T>,
    pub method: ExtractionMethod,
    /// Extraction uncertainty (the grid spacing).
    pub uncertainty: T,
    /// Levels skipped because the stopping region was empty or too close to the grid edge.
    pub flagged: Vec<usize>,
}

impl<T: Real> BoundaryCurve<T> {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Sample at surface level `n`, if present.
    pub fn at_level(&self, n: usize) -> Option<T> {
        self.levels.binary_search(&n).ok().map(|k| self.b[k])
    }

    /// Piecewise-linear interpolation in `t`, clamped at the ends.
    pub fn interpolate(&self, t: T) -> T {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.b[0];
        }
        if t >= self.t[n - 1] {
            return self.b[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        let th = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        self.b[k] + th * (self.b[k + 1] - self.b[k])
    }

    /// Synthetic curve with the given samples (levels are the indices).
    pub fn synthetic(t: Vec<T>, b: Vec<T>, uncertainty: T) -> Self {
        let levels = (0..t.len()).collect();
        Self { levels, t, b, method: ExtractionMethod::MaskEdge, uncertainty, flagged: Vec::new() }
    }
}

/// Index of the last node of the contact run starting at `x_min`, if the run is nonempty.
pub(crate) fn mask_edge_index(mask: &[bool]) -> Option<usize> {
    if !mask.first().copied().unwrap_or(false) {
        return None;
    }
    Some(mask.iter().position(|m| !m).map_or(mask.len() - 1, |p| p - 1))
}

pub fn extract_boundary<T: Real>(surface: &SolutionSurface<T>, method: ExtractionMethod) -> Result<BoundaryCurve<T>> {
    if surface.kind != SurfaceKind::American {
        return Err(Error::Extraction("European surfaces have no exercise region".into()));
    }
    let g = &surface.grid;
    let lk = surface.params.log_strike();
    let payoff = surface.payoff_row();
    let nc = g.n_cols();
    let two = T::lit(2.0);
    let mut curve = BoundaryCurve { levels: Vec::new(), t: Vec::new(), b: Vec::new(), method, uncertainty: g.dx, flagged: Vec::new() };
    for n in 0..=g.nt {
        if n == 0 {
            curve.levels.push(0);
            curve.t.push(T::zero());
            curve.b.push(lk);
            continue;
        }
        let Some(j) = mask_edge_index(surface.mask_row(n)) else {
            curve.flagged.push(n);
            continue;
        };
        let b = match method {
            ExtractionMethod::MaskEdge => g.x(j),
            ExtractionMethod::SmoothfitCross => {
                // centered derivatives of u - g at the 2nd and 3rd continuation nodes
                let c = j + 1;
                if c + 3 >= nc {
                    curve.flagged.push(n);
                    continue;
                }
                let row = surface.row(n);
                let v = |i: usize| row[i] - payoff[i];
                let d1 = (v(c + 2) - v(c)) / (two * g.dx);
                let d2 = (v(c + 3) - v(c + 1)) / (two * g.dx);
                if d2 - d1 <= T::zero() {
                    g.x(j)
                } else {
                    g.x(c + 1) - d1 * g.dx / (d2 - d1)
                }
            }
        };
        curve.levels.push(n);
        curve.t.push(g.t(n));
        curve.b.push(b.max(g.x_min).min(lk));
    }
    if curve.levels.len() < 2 {
        return Err(Error::Extraction("stopping region empty at every positive level".into()));
    }
    if !curve.flagged.is_empty() {
        log::warn!("boundary extraction skipped {} level(s), first {}", curve.flagged.len(), curve.flagged[0]);
    }
    Ok(curve)
}
