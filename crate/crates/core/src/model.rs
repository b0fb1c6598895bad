//! Market data, jump laws and the derived quantities `xi`, `mu` and the
//! Yang condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm_cdf, norm_pdf, Real};

/// Tabulated volatility surface on a rectangular (x, t) lattice, bilinear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface<T> {
    pub xs: Vec<T>,
    pub ts: Vec<T>,
    /// Row-major: `values[it * xs.len() + ix]`.
    pub values: Vec<T>,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> VolSurface<T> {
    pub fn validate(&self) -> Result<()> {
        if self.xs.len() < 2 || self.ts.len() < 2 {
            return Err(Error::param("sigma", "surface needs at least 2 nodes per axis"));
        }
        if self.values.len() != self.xs.len() * self.ts.len() {
            return Err(Error::param("sigma", "surface value count does not match axes"));
        }
        if !(self.xs.windows(2).all(|w| w[0] < w[1]) && self.ts.windows(2).all(|w| w[0] < w[1])) {
            return Err(Error::param("sigma", "surface axes must be strictly increasing"));
        }
        if !(self.lower > T::zero() && self.lower <= self.upper) {
            return Err(Error::param("sigma", "bounds need 0 < lower <= upper"));
        }
        if let Some(v) = self.values.iter().find(|&&v| !(v >= self.lower && v <= self.upper)) {
            return Err(Error::param("sigma", format!("surface value {v} outside [{}, {}]", self.lower, self.upper)));
        }
        Ok(())
    }

    fn bracket(axis: &[T], v: T) -> (usize, T) {
        if v <= axis[0] {
            return (0, T::zero());
        }
        let n = axis.len();
        if v >= axis[n - 1] {
            return (n - 2, T::one());
        }
        let i = axis.partition_point(|&a| a <= v) - 1;
        (i, (v - axis[i]) / (axis[i + 1] - axis[i]))
    }

    /// Bilinear interpolation, clamped to the table edges.
    pub fn eval(&self, x: T, t: T) -> T {
        let nx = self.xs.len();
        let (i, a) = Self::bracket(&self.xs, x);
        let (j, b) = Self::bracket(&self.ts, t);
        let v = |jj: usize, ii: usize| self.values[jj * nx + ii];
        let one = T::one();
        (one - b) * ((one - a) * v(j, i) + a * v(j, i + 1)) + b * ((one - a) * v(j + 1, i) + a * v(j + 1, i + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Volatility<T> {
    Constant(T),
    Surface(VolSurface<T>),
}

impl<T: Real> Volatility<T> {
    pub fn at(&self, x: T, t: T) -> T {
        match self {
            Volatility::Constant(s) => *s,
            Volatility::Surface(s) => s.eval(x, t),
        }
    }

    pub fn constant(&self) -> Option<T> {
        match self {
            Volatility::Constant(s) => Some(*s),
            Volatility::Surface(_) => None,
        }
    }

    /// Representative level used for default truncation: the constant, or the upper bound.
    pub fn scale(&self) -> T {
        match self {
            Volatility::Constant(s) => *s,
            Volatility::Surface(s) => s.upper,
        }
    }
}

/// Scalar market data. Build with [`MarketParams::new`] so the invariants are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams<T> {
    pub r: T,
    pub q: T,
    pub lambda: T,
    pub strike: T,
    pub maturity: T,
    pub sigma: Volatility<T>,
}

impl<T: Real> MarketParams<T> {
    pub fn new(r: T, q: T, lambda: T, strike: T, maturity: T, sigma: Volatility<T>) -> Result<Self> {
        let p = Self { r, q, lambda, strike, maturity, sigma };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor with constant volatility.
    pub fn constant(r: T, q: T, lambda: T, strike: T, maturity: T, sigma: T) -> Result<Self> {
        Self::new(r, q, lambda, strike, maturity, Volatility::Constant(sigma))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        finite("r", self.r)?;
        finite("q", self.q)?;
        finite("lambda", self.lambda)?;
        finite("strike", self.strike)?;
        finite("maturity", self.maturity)?;
        // r = 0 would push the boundary to minus infinity.
        if self.r <= T::zero() {
            return Err(Error::param("r", "interest rate must be strictly positive"));
        }
        if self.q < T::zero() {
            return Err(Error::param("q", "dividend yield must be >= 0"));
        }
        if self.lambda < T::zero() {
            return Err(Error::param("lambda", "jump intensity must be >= 0"));
        }
        if self.strike <= T::zero() {
            return Err(Error::param("strike", "must be > 0"));
        }
        if self.maturity <= T::zero() {
            return Err(Error::param("maturity", "must be > 0"));
        }
        match &self.sigma {
            Volatility::Constant(s) => {
                if !(s.is_finite() && *s > T::zero()) {
                    return Err(Error::param("sigma", "constant volatility must be in (0, inf)"));
                }
            }
            Volatility::Surface(s) => s.validate()?,
        }
        Ok(())
    }

    pub fn log_strike(&self) -> T {
        self.strike.ln()
    }

    /// Put payoff `(K - e^x)^+` in log-price.
    pub fn payoff(&self, x: T) -> T {
        (self.strike - x.exp()).max(T::zero())
    }
}

/// Jump-size law `nu` of `Z` (the stock is multiplied by `e^Z` at a jump).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw<T> {
    Merton { mean: T, std: T },
    Kou { p: T, eta1: T, eta2: T },
    Discrete { points: Vec<(T, T)> },
}

impl<T: Real> JumpLaw<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Merton { mean, std } => {
                if !mean.is_finite() || !(std.is_finite() && *std > T::zero()) {
                    return Err(Error::param("jump", "Merton needs finite mean and std > 0"));
                }
            }
            JumpLaw::Kou { p, eta1, eta2 } => {
                if !(*p >= T::zero() && *p <= T::one()) {
                    return Err(Error::param("jump.p", "must lie in [0, 1]"));
                }
                if !(eta2.is_finite() && *eta2 > T::zero()) {
                    return Err(Error::param("jump.eta2", "must be > 0"));
                }
                if !eta1.is_finite() || *eta1 <= T::zero() {
                    return Err(Error::param("jump.eta1", "must be > 0"));
                }
                if *eta1 <= T::one() {
                    return Err(Error::InfiniteMoment(format!("Kou eta1 = {eta1} <= 1 gives E[e^Z] = inf")));
                }
            }
            JumpLaw::Discrete { points } => {
                if points.is_empty() {
                    return Err(Error::param("jump.points", "need at least one point"));
                }
                if points.iter().any(|&(z, w)| !z.is_finite() || w.is_nan() || w < T::zero()) {
                    return Err(Error::param("jump.points", "points need finite z and w >= 0"));
                }
                let total: T = points.iter().map(|p| p.1).sum();
                if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
                    return Err(Error::param("jump.points", format!("weights sum to {total}, expected 1")));
                }
            }
        }
        Ok(())
    }

    /// `xi = E[e^Z]`.
    pub fn xi(&self) -> Result<T> {
        self.validate()?;
        let one = T::one();
        Ok(match self {
            JumpLaw::Merton { mean, std } => (*mean + *std * *std / T::lit(2.0)).exp(),
            JumpLaw::Kou { p, eta1, eta2 } => *p * *eta1 / (*eta1 - one) + (one - *p) * *eta2 / (*eta2 + one),
            JumpLaw::Discrete { points } => points.iter().map(|&(z, w)| w * z.exp()).sum(),
        })
    }

    /// `E[(e^Z - 1) 1{Z > 0}]`.
    pub fn up_gain(&self) -> Result<T> {
        self.validate()?;
        Ok(match self {
            JumpLaw::Merton { mean, std } => {
                let (m, s) = (*mean, *std);
                (m + s * s / T::lit(2.0)).exp() * norm_cdf((m + s * s) / s) - norm_cdf(m / s)
            }
            JumpLaw::Kou { p, eta1, .. } => *p / (*eta1 - T::one()),
            JumpLaw::Discrete { points } => points
                .iter()
                .filter(|p| p.0 > T::zero())
                .map(|&(z, w)| w * (z.exp() - T::one()))
                .sum(),
        })
    }

    /// `E[(e^{x+Z} - K)^+]` in closed form.
    pub fn call_expectation(&self, x: T, strike: T) -> T {
        let one = T::one();
        let zero = T::zero();
        let lk = strike.ln();
        match self {
            JumpLaw::Merton { mean, std } => {
                let (m, s) = (*mean, *std);
                let d2 = (x + m - lk) / s;
                let d1 = d2 + s;
                (x + m + s * s / T::lit(2.0)).exp() * norm_cdf(d1) - strike * norm_cdf(d2)
            }
            JumpLaw::Kou { p, eta1, eta2 } => {
                let (p, e1, e2) = (*p, *eta1, *eta2);
                let zs = lk - x;
                let ex = x.exp();
                if zs >= zero {
                    p * (ex * e1 / (e1 - one) * (-(e1 - one) * zs).exp() - strike * (-e1 * zs).exp())
                } else {
                    p * (ex * e1 / (e1 - one) - strike)
                        + (one - p) * (ex * e2 / (e2 + one) * (one - ((e2 + one) * zs).exp()) - strike * (one - (e2 * zs).exp()))
                }
            }
            JumpLaw::Discrete { points } => points.iter().map(|&(z, w)| w * ((x + z).exp() - strike).max(zero)).sum(),
        }
    }

    /// Distribution function `P(Z <= z)`.
    pub fn cdf(&self, z: T) -> T {
        let one = T::one();
        match self {
            JumpLaw::Merton { mean, std } => norm_cdf((z - *mean) / *std),
            JumpLaw::Kou { p, eta1, eta2 } => {
                if z < T::zero() {
                    (one - *p) * (*eta2 * z).exp()
                } else {
                    one - *p * (-*eta1 * z).exp()
                }
            }
            JumpLaw::Discrete { points } => points.iter().filter(|p| p.0 <= z).map(|p| p.1).sum(),
        }
    }

    /// Lebesgue density, `None` for atomic laws.
    pub fn density(&self, z: T) -> Option<T> {
        match self {
            JumpLaw::Merton { mean, std } => Some(norm_pdf((z - *mean) / *std) / *std),
            JumpLaw::Kou { p, eta1, eta2 } => Some(if z < T::zero() {
                (T::one() - *p) * *eta2 * (*eta2 * z).exp()
            } else {
                *p * *eta1 * (-*eta1 * z).exp()
            }),
            JumpLaw::Discrete { .. } => None,
        }
    }

    /// Typical jump displacement, used for default truncation.
    pub fn jump_scale(&self) -> T {
        match self {
            JumpLaw::Merton { mean, std } => mean.abs() + T::lit(4.0) * *std,
            JumpLaw::Kou { eta1, eta2, .. } => T::lit(4.0) / eta1.min(*eta2),
            JumpLaw::Discrete { points } => points.iter().map(|p| p.0.abs()).fold(T::zero(), T::max),
        }
    }

    /// Support window `[lo, hi]` holding all but a negligible tail.
    ///
    /// Merton uses `mean +- w*std`. For Kou the exponential tails are cut where
    /// their mass equals the Gaussian mass beyond `w` standard deviations.
    pub fn window(&self, tail_width: T) -> (T, T) {
        match self {
            JumpLaw::Merton { mean, std } => (*mean - tail_width * *std, *mean + tail_width * *std),
            JumpLaw::Kou { p, eta1, eta2 } => {
                let depth = tail_width * tail_width / T::lit(2.0);
                let lo = if *p < T::one() { -depth / *eta2 } else { T::zero() };
                let hi = if *p > T::zero() { depth / *eta1 } else { T::zero() };
                (lo, hi)
            }
            JumpLaw::Discrete { points } => {
                let lo = points.iter().map(|p| p.0).fold(T::infinity(), T::min);
                let hi = points.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
                (lo, hi)
            }
        }
    }

    /// Whether `nu` charges `(0, inf)`.
    pub fn charges_positive(&self) -> bool {
        match self {
            JumpLaw::Merton { .. } => true,
            JumpLaw::Kou { p, .. } => *p > T::zero(),
            JumpLaw::Discrete { points } => points.iter().any(|&(z, w)| z > T::zero() && w > T::zero()),
        }
    }

    /// Whether the support is unbounded above (a Discrete law never is).
    pub fn unbounded_above(&self) -> bool {
        match self {
            JumpLaw::Merton { .. } => true,
            JumpLaw::Kou { p, .. } => *p > T::zero(),
            JumpLaw::Discrete { .. } => false,
        }
    }
}

/// Derived quantities shared by all modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary<T> {
    pub xi: T,
    pub mu: T,
    pub yang_holds: bool,
    pub up_gain: T,
}

impl<T: Real> ModelSummary<T> {
    pub fn new(params: &MarketParams<T>, law: &JumpLaw<T>) -> Result<Self> {
        params.validate()?;
        let xi = compute_xi(law)?;
        let mu = drift_mu(params, law)?;
        let (yang_holds, up_gain) = check_yang_condition(params, law)?;
        Ok(Self { xi, mu, yang_holds, up_gain })
    }
}

pub fn compute_xi<T: Real>(law: &JumpLaw<T>) -> Result<T> {
    law.xi()
}

/// `mu = r - q + lambda - lambda * xi`.
pub fn drift_mu<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>) -> Result<T> {
    let xi = law.xi()?;
    Ok(params.r - params.q + params.lambda - params.lambda * xi)
}

/// Returns `(r >= q + lambda * up_gain, up_gain)`.
pub fn check_yang_condition<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>) -> Result<(bool, T)> {
    let g = law.up_gain()?;
    Ok((params.r >= params.q + params.lambda * g, g))
}

/// Sufficient condition for `J(., t)` to be strictly increasing in `x`:
/// a positive dividend yield, or a jump law charging the positive half-line.
pub fn j_strictly_increasing_guaranteed<T: Real>(params: &MarketParams<T>, law: &JumpLaw<T>) -> bool {
    params.q > T::zero() || (params.lambda > T::zero() && law.charges_positive())
}
