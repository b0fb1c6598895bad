//! Smooth fit, the `u_xx` gap, the `b'(t)` identity and the Hölder estimate.

use serde::{Deserialize, Serialize};

use super::auxiliary::{solve_b0, AuxiliaryJ};
use super::{extract_boundary, BoundaryCurve, ExtractionMethod};
use crate::error::{Error, Result};
use crate::model::{check_yang_condition, j_strictly_increasing_guaranteed, JumpLaw, MarketParams};
use crate::scalar::Real;
use crate::solver::{SolutionSurface, SolverOptions};

/// Levels below this index are excluded from all regularity diagnostics.
pub const FIRST_DIAGNOSTIC_LEVEL: usize = 10;

/// Quadratic through the first three nodes strictly right of `b`.
/// Returns `(p'(b), p'', j)` where `j` is the first node.
pub fn local_derivative_at<T: Real>(x_min: T, dx: T, row: &[T], b: T) -> Option<(T, T, usize)> {
    let s = (b - x_min) / dx;
    let mut j = s.floor().to_usize()? + 1;
    if T::from_usize_lossy(j) - s < T::lit(1e-9) {
        j += 1;
    }
    if j + 2 >= row.len() {
        return None;
    }
    let d1 = (row[j + 1] - row[j]) / dx;
    let d2 = (row[j + 2] - row[j + 1] - row[j + 1] + row[j]) / (dx * dx);
    let sj = (b - (x_min + T::from_usize_lossy(j) * dx)) / dx;
    Some((d1 + d2 * dx * (sj - T::lit(0.5)), d2, j))
}

/// One-sided slope at `b+` of a row that vanishes at `b`: models `row = a s + c s^2 + e s^3`
/// with `s = x - b` through the first three nodes right of `b` (nodes closer than
/// `dx/10` are skipped) and returns `a`.
pub fn anchored_slope_at<T: Real>(x_min: T, dx: T, row: &[T], b: T) -> Option<T> {
    let s = (b - x_min) / dx;
    let mut j = s.floor().to_usize()? + 1;
    if T::from_usize_lossy(j) - s < T::lit(0.1) {
        j += 1;
    }
    if j + 2 >= row.len() {
        return None;
    }
    // quadratic interpolation of row / s, evaluated at s = 0
    let xs: [T; 3] = std::array::from_fn(|k| (T::from_usize_lossy(j + k) - s) * dx);
    let mut a = T::zero();
    for k in 0..3 {
        let (p, q) = (xs[(k + 1) % 3], xs[(k + 2) % 3]);
        a += row[j + k] / xs[k] * p * q / ((xs[k] - p) * (xs[k] - q));
    }
    Some(a)
}

/// Second derivative at `b+`: the second differences centered at the first two
/// nodes right of `b`, extrapolated linearly to `b`.
pub fn second_derivative_at<T: Real>(x_min: T, dx: T, row: &[T], b: T) -> Option<T> {
    let (_, d2a, j) = local_derivative_at(x_min, dx, row, b)?;
    if j + 3 >= row.len() {
        return None;
    }
    let d2b = (row[j + 3] - row[j + 2] - row[j + 2] + row[j + 1]) / (dx * dx);
    let dist = (x_min + T::from_usize_lossy(j + 1) * dx - b) / dx;
    Some(d2a + (d2a - d2b) * dist)
}

/// `w = du/dt` on level `n`: centered differences, one-sided at the ends.
pub fn time_derivative_row<T: Real>(surface: &SolutionSurface<T>, n: usize) -> Vec<T> {
    let nt = surface.grid.nt;
    let dt = surface.grid.dt;
    let (a, b, span) = if n == 0 {
        (0, 1, dt)
    } else if n == nt {
        (nt - 1, nt, dt)
    } else {
        (n - 1, n + 1, dt + dt)
    };
    surface.row(b).iter().zip(surface.row(a)).map(|(&p, &q)| (p - q) / span).collect()
}

fn diagnostic_levels<T: Real>(curve: &BoundaryCurve<T>, first: usize) -> impl Iterator<Item = (usize, T, T)> + '_ {
    curve
        .levels
        .iter()
        .zip(curve.t.iter().zip(&curve.b))
        .filter(move |(n, _)| **n >= first)
        .map(|(&n, (&t, &b))| (n, t, b))
}

fn excess_row<T: Real>(surface: &SolutionSurface<T>, payoff: &[T], n: usize) -> Vec<T> {
    surface.row(n).iter().zip(payoff).map(|(&u, &p)| u - p).collect()
}

/// `|du/dx(b+) + e^b|` per diagnostic level: `(level, t, residual)`.
pub fn smooth_fit_residual<T: Real>(surface: &SolutionSurface<T>, curve: &BoundaryCurve<T>) -> Vec<(usize, T, T)> {
    let g = &surface.grid;
    let payoff = surface.payoff_row();
    diagnostic_levels(curve, FIRST_DIAGNOSTIC_LEVEL)
        .filter_map(|(n, t, b)| {
            let d = anchored_slope_at(g.x_min, g.dx, &excess_row(surface, &payoff, n), b)?;
            Some((n, t, d.abs()))
        })
        .collect()
}

/// `u_xx(b+) + e^b` per diagnostic level, from the second differences of `u - g`.
pub fn uxx_gap<T: Real>(surface: &SolutionSurface<T>, curve: &BoundaryCurve<T>) -> Vec<(usize, T, T)> {
    let g = &surface.grid;
    let payoff = surface.payoff_row();
    diagnostic_levels(curve, FIRST_DIAGNOSTIC_LEVEL)
        .filter_map(|(n, t, b)| {
            let d2 = second_derivative_at(g.x_min, g.dx, &excess_row(surface, &payoff, n), b)?;
            Some((n, t, d2))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BPrimeSample<T> {
    pub level: usize,
    pub t: T,
    pub b: T,
    /// `(1/2) sigma^2 dw/dx(b+)`.
    pub numerator: T,
    /// `(mu - r - lambda) e^b + (r + lambda) K - f(b, t)`, equal to `-J(b, t)`.
    pub denominator: T,
    pub formula: T,
    pub fd: Option<T>,
    pub discrepancy: Option<T>,
}

/// Default half-width (in levels) of the centered difference used for `b'_fd`.
pub fn default_fd_half_width(nt: usize) -> usize {
    (nt / 50).max(1)
}

/// The quotient `b' = -numerator / denominator` against a centered difference of the curve.
pub fn bprime_identity<T: Real>(
    surface: &SolutionSurface<T>,
    curve: &BoundaryCurve<T>,
    opts: &SolverOptions<T>,
    fd_half_width: usize,
) -> Result<Vec<BPrimeSample<T>>> {
    let g = &surface.grid;
    let p = &surface.params;
    let aux = AuxiliaryJ::new(surface, opts)?;
    let half = T::lit(0.5);
    let h = fd_half_width.max(1);
    let mut out = Vec::new();
    for (k, (&n, (&t, &b))) in curve.levels.iter().zip(curve.t.iter().zip(&curve.b)).enumerate() {
        if n < FIRST_DIAGNOSTIC_LEVEL {
            continue;
        }
        let w = time_derivative_row(surface, n);
        let Some((dxw, _, _)) = local_derivative_at(g.x_min, g.dx, &w, b) else { continue };
        let sig = p.sigma.at(b, t);
        let numerator = half * sig * sig * dxw;
        let denominator = -aux.eval(b, n);
        if denominator.abs() <= T::lit(1e-12) * p.strike {
            return Err(Error::SingularIdentity { level: n, value: denominator.as_f64() });
        }
        let formula = -numerator / denominator;
        let fd = (k >= h && k + h < curve.len() && curve.levels[k + h] - curve.levels[k - h] == 2 * h)
            .then(|| (curve.b[k + h] - curve.b[k - h]) / (curve.t[k + h] - curve.t[k - h]));
        let discrepancy = fd.filter(|f| *f != T::zero()).map(|f| ((formula - f) / f).abs());
        out.push(BPrimeSample { level: n, t, b, numerator, denominator, formula, fd, discrepancy });
    }
    Ok(out)
}

/// Hölder exponent of `b` on `[t_lo, t_hi]` from the modulus of continuity:
/// for each lag `delta <= (t_hi - t_lo)/4` take the largest increment
/// `max |b(t + delta) - b(t)|`, keep lags whose modulus exceeds `2 * noise`,
/// and regress `log modulus` on `log delta`. Returns `(alpha, r^2)`.
pub fn holder_exponent_raw<T: Real>(t: &[T], b: &[T], noise: T, t_lo: T, t_hi: T) -> Result<(T, T)> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(b).filter(|(s, _)| **s >= t_lo && **s <= t_hi).map(|(s, v)| (s.as_f64(), v.as_f64())).collect();
    if pts.len() < 20 {
        return Err(Error::InsufficientData(format!("{} levels in window, need 20", pts.len())));
    }
    let span = pts[pts.len() - 1].0 - pts[0].0;
    let step = span / (pts.len() - 1) as f64;
    let max_lag = ((t_hi - t_lo).as_f64() / 4.0 / step + 1e-9).floor() as usize;
    let floor = 2.0 * noise.as_f64();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for lag in 1..=max_lag.min(pts.len() - 1) {
        let omega = (0..pts.len() - lag).map(|i| (pts[i + lag].1 - pts[i].1).abs()).fold(0.0, f64::max);
        if omega > floor {
            let delta = (0..pts.len() - lag).map(|i| pts[i + lag].0 - pts[i].0).sum::<f64>() / (pts.len() - lag) as f64;
            xs.push(delta.ln());
            ys.push(omega.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientData(format!("{} lags above the noise floor, need 10", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((T::lit(slope), T::lit(r2)))
}

/// [`holder_exponent_raw`] on a curve with its own uncertainty as the noise level.
pub fn holder_exponent<T: Real>(curve: &BoundaryCurve<T>, t_lo: T, t_hi: T) -> Result<(T, T)> {
    holder_exponent_raw(&curve.t, &curve.b, curve.uncertainty, t_lo, t_hi)
}

/// `lim_{t -> 0+} b(t) = min(log K, B0)`; equal to `log K` when the Yang condition holds.
pub fn expected_b0_limit<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>) -> Result<T> {
    let (yang, _) = check_yang_condition(params, law)?;
    if yang {
        return Ok(params.log_strike());
    }
    Ok(solve_b0(params, law)?.min(params.log_strike()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions<T> {
    /// Half-width in levels of the centered difference for `b'_fd` (0 picks `nt / 50`).
    pub fd_half_width: usize,
    /// Hölder window as fractions of the maturity.
    pub holder_lo: T,
    pub holder_hi: T,
    /// Level used for the `b(0+)` measurement.
    pub limit_level: usize,
}

impl<T: Real> Default for DiagnoseOptions<T> {
    fn default() -> Self {
        Self { fd_half_width: 0, holder_lo: T::lit(0.2), holder_hi: T::one(), limit_level: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics<T> {
    pub level: usize,
    pub t: T,
    pub b_mask: T,
    pub b_smooth: T,
    /// `None` when `J(., t) < 0` everywhere (`B = +inf`).
    pub big_b: Option<T>,
    pub smooth_fit_residual: T,
    pub uxx_gap: T,
    /// `-2 J(b, t) / sigma^2`.
    pub gap_from_j: T,
    pub j_at_b: T,
    pub bprime_formula: T,
    pub bprime_fd: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport<T> {
    pub dx: T,
    pub dt: T,
    pub levels: Vec<LevelDiagnostics<T>>,
    /// `(t, B(t))` at every positive level.
    pub b_curve: Vec<(T, Option<T>)>,
    pub b0: Option<T>,
    pub b0_limit_expected: T,
    pub b0_limit_measured: Option<T>,
    pub holder_fit: Option<(T, T)>,
    pub warnings: Vec<String>,
}

/// Runs the full regularity lab on an American surface.
pub fn diagnose<T: Real>(surface: &SolutionSurface<T>, solver: &SolverOptions<T>, opts: &DiagnoseOptions<T>) -> Result<DiagnosticsReport<T>> {
    let p = &surface.params;
    let law = &surface.law;
    let g = &surface.grid;
    let mut warnings = Vec::new();
    if !j_strictly_increasing_guaranteed(p, law) {
        let msg = "J may not be strictly increasing in x (q = 0 and no upward jumps); B(t) may be degenerate".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mask = extract_boundary(surface, ExtractionMethod::MaskEdge)?;
    let smooth = extract_boundary(surface, ExtractionMethod::SmoothfitCross)?;
    let aux = AuxiliaryJ::new(surface, solver)?;
    let fd_h = if opts.fd_half_width == 0 { default_fd_half_width(g.nt) } else { opts.fd_half_width };
    let bprime = bprime_identity(surface, &smooth, solver, fd_h)?;
    let residual = smooth_fit_residual(surface, &mask);
    let gap = uxx_gap(surface, &smooth);

    let mut b_curve = Vec::with_capacity(g.nt);
    let mut levels = Vec::new();
    for n in 1..=g.nt {
        let integral = aux.integral_row(n);
        let big_b = aux.level_b(&integral, T::lit(1e-10))?;
        b_curve.push((g.t(n), big_b));
        if n < FIRST_DIAGNOSTIC_LEVEL {
            continue;
        }
        let (Some(bm), Some(bs)) = (mask.at_level(n), smooth.at_level(n)) else { continue };
        let find = |v: &[(usize, T, T)]| v.iter().find(|e| e.0 == n).map(|e| e.2);
        let (Some(res), Some(gp), Some(bp)) = (find(&residual), find(&gap), bprime.iter().find(|e| e.level == n)) else { continue };
        let j = aux.eval_with(&integral, bs);
        let sig = p.sigma.at(bs, g.t(n));
        levels.push(LevelDiagnostics {
            level: n,
            t: g.t(n),
            b_mask: bm,
            b_smooth: bs,
            big_b,
            smooth_fit_residual: res,
            uxx_gap: gp,
            gap_from_j: -(j + j) / (sig * sig),
            j_at_b: j,
            bprime_formula: bp.formula,
            bprime_fd: bp.fd,
        });
    }
    let b0 = if j_strictly_increasing_guaranteed(p, law) { solve_b0(p, law).ok() } else { None };
    let b0_limit_expected = expected_b0_limit(p, law)?;
    let b0_limit_measured = mask.at_level(opts.limit_level);
    let holder_fit = match holder_exponent(&smooth, opts.holder_lo * g.maturity, opts.holder_hi * g.maturity) {
        Ok(fit) => Some(fit),
        Err(e) => {
            warnings.push(format!("Hölder fit unavailable: {e}"));
            None
        }
    };
    Ok(DiagnosticsReport { dx: g.dx, dt: g.dt, levels, b_curve, b0, b0_limit_expected, b0_limit_measured, holder_fit, warnings })
}
