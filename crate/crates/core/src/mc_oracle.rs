//! Monte Carlo oracle for the jump diffusion (f64 only).
//!
//! Paths use the exact log-Euler scheme for constant `sigma`: per step a Gaussian
//! increment, a Poisson number of jumps and i.i.d. jump sizes. Each path draws from
//! its own ChaCha8 stream (`set_stream(path index)`), so results do not depend on how
//! paths are scheduled across threads. Reductions run over fixed chunks in path order.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCurve;
use crate::error::{Error, Result};
use crate::model::{drift_mu, JumpLaw, MarketParams};

const CHUNK: usize = 4096;

/// Default time steps per year of maturity.
pub const STEPS_PER_YEAR: f64 = 252.0;

pub fn default_steps(maturity: f64) -> usize {
    (STEPS_PER_YEAR * maturity).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub n_paths: usize,
    pub n_steps: usize,
    pub maturity: f64,
    pub s0: f64,
    pub seed: u64,
    /// `log S_T` per path.
    pub log_terminal: Vec<f64>,
    /// Total number of jumps per path.
    pub jump_counts: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

enum JumpSampler {
    None,
    Merton { mean: f64, std: f64 },
    Kou { p: f64, eta1: f64, eta2: f64 },
    Discrete { z: Vec<f64>, index: WeightedIndex<f64> },
}

impl JumpSampler {
    fn new(law: &JumpLaw<f64>, lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Ok(Self::None);
        }
        Ok(match law {
            JumpLaw::Merton { mean, std } => Self::Merton { mean: *mean, std: *std },
            JumpLaw::Kou { p, eta1, eta2 } => Self::Kou { p: *p, eta1: *eta1, eta2: *eta2 },
            JumpLaw::Discrete { points } => {
                let index = WeightedIndex::new(points.iter().map(|p| p.1)).map_err(|e| Error::param("jump.points", e.to_string()))?;
                Self::Discrete { z: points.iter().map(|p| p.0).collect(), index }
            }
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Merton { mean, std } => mean + std * rng.sample::<f64, _>(StandardNormal),
            Self::Kou { p, eta1, eta2 } => {
                let up = rng.random::<f64>() < *p;
                let e: f64 = rng.sample(Exp1);
                if up {
                    e / eta1
                } else {
                    -e / eta2
                }
            }
            Self::Discrete { z, index } => z[index.sample(rng)],
        }
    }
}

/// Shared path generator so that pricing and policy evaluation see the same paths.
struct Stepper {
    x0: f64,
    drift: f64,
    vol: f64,
    dt: f64,
    n_steps: usize,
    poisson: Option<Poisson<f64>>,
    jumps: JumpSampler,
    base: ChaCha8Rng,
}

impl Stepper {
    fn new(params: &MarketParams<f64>, law: &JumpLaw<f64>, s0: f64, n_steps: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::param("s0", "must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be positive"));
        }
        let sigma = params.sigma.constant().ok_or_else(|| Error::Unsupported("Monte Carlo needs constant sigma".into()))?;
        let mu = drift_mu(params, law)?;
        let dt = params.maturity / n_steps as f64;
        let poisson = if params.lambda > 0.0 {
            Some(Poisson::new(params.lambda * dt).map_err(|e| Error::param("lambda", e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            x0: s0.ln(),
            drift: (mu - 0.5 * sigma * sigma) * dt,
            vol: sigma * dt.sqrt(),
            dt,
            n_steps,
            poisson,
            jumps: JumpSampler::new(law, params.lambda)?,
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Walks path `index`; `stop(k, x)` is asked after every step `k < n_steps`.
    /// Returns `(final log-price, steps taken, jumps)`.
    fn walk(&self, index: usize, mut stop: impl FnMut(usize, f64) -> bool) -> (f64, usize, u32) {
        let mut rng = self.base.clone();
        rng.set_stream(index as u64);
        let mut x = self.x0;
        let mut jumps = 0u32;
        if stop(0, x) {
            return (x, 0, 0);
        }
        for k in 1..=self.n_steps {
            x += self.drift + self.vol * rng.sample::<f64, _>(StandardNormal);
            if let Some(p) = &self.poisson {
                let n = p.sample(&mut rng) as u32;
                for _ in 0..n {
                    x += self.jumps.draw(&mut rng);
                }
                jumps += n;
            }
            if k < self.n_steps && stop(k, x) {
                return (x, k, jumps);
            }
        }
        (x, self.n_steps, jumps)
    }
}

pub fn simulate(params: &MarketParams<f64>, law: &JumpLaw<f64>, s0: f64, n_paths: usize, n_steps: usize, seed: u64) -> Result<PathBatch> {
    let st = Stepper::new(params, law, s0, n_steps, seed)?;
    let mut log_terminal = vec![0.0; n_paths];
    let mut jump_counts = vec![0u32; n_paths];
    log_terminal.par_chunks_mut(CHUNK).zip(jump_counts.par_chunks_mut(CHUNK)).enumerate().for_each(|(c, (xs, js))| {
        for (k, (x, j)) in xs.iter_mut().zip(js.iter_mut()).enumerate() {
            let (xt, _, nj) = st.walk(c * CHUNK + k, |_, _| false);
            *x = xt;
            *j = nj;
        }
    });
    Ok(PathBatch { n_paths, n_steps, maturity: params.maturity, s0, seed, log_terminal, jump_counts })
}

/// Mean and standard error from per-path samples, reduced chunk by chunk in path order.
fn estimate(samples: impl IndexedParallelIterator<Item = f64>, n: usize, seed: u64) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::InsufficientData("need at least two paths".into()));
    }
    let parts: Vec<(f64, f64)> = samples
        .chunks(CHUNK)
        .map(|c| c.iter().fold((0.0, 0.0), |(s, s2), v| (s + v, s2 + v * v)))
        .collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(McEstimate { value: mean, std_error: (var / nf).sqrt(), n_paths: n, seed })
}

/// Discounted mean of `(K - S_T)^+`.
pub fn price_european(batch: &PathBatch, strike: f64, r: f64) -> Result<McEstimate> {
    let disc = (-r * batch.maturity).exp();
    estimate(batch.log_terminal.par_iter().map(|x| disc * (strike - x.exp()).max(0.0)), batch.n_paths, batch.seed)
}

/// Mean of `e^{-(r - q) T} S_T / S_0`, which should be 1.
pub fn martingale_check(batch: &PathBatch, r: f64, q: f64) -> Result<McEstimate> {
    let x0 = batch.s0.ln();
    let drift = (r - q) * batch.maturity;
    estimate(batch.log_terminal.par_iter().map(|x| (x - x0 - drift).exp()), batch.n_paths, batch.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMoments {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

/// Sample mean and variance of `log(S_T / S_0)` with their standard errors.
pub fn log_return_moments(batch: &PathBatch) -> Result<LogMoments> {
    let x0 = batch.s0.ln();
    let m = estimate(batch.log_terminal.par_iter().map(|x| x - x0), batch.n_paths, batch.seed)?;
    let mean = m.value;
    let c2 = estimate(batch.log_terminal.par_iter().map(|x| (x - x0 - mean).powi(2)), batch.n_paths, batch.seed)?;
    Ok(LogMoments { mean, mean_se: m.std_error, variance: c2.value, variance_se: c2.std_error })
}

/// Value of the rule "stop the first step `log S <= boundary(T - elapsed)`", where
/// `boundary` takes time-to-maturity. Unstopped paths pay `(K - S_T)^+` at maturity.
pub fn policy_value_with(
    params: &MarketParams<f64>,
    law: &JumpLaw<f64>,
    s0: f64,
    boundary: impl Fn(f64) -> f64 + Sync,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let st = Stepper::new(params, law, s0, n_steps, seed)?;
    let (k, r, big_t) = (params.strike, params.r, params.maturity);
    estimate(
        (0..n_paths).into_par_iter().map(|i| {
            let (x, steps, _) = st.walk(i, |k, x| x <= boundary(big_t - k as f64 * st.dt));
            let t = steps as f64 * st.dt;
            (-r * t).exp() * (k - x.exp()).max(0.0)
        }),
        n_paths,
        seed,
    )
}

/// [`policy_value_with`] for an extracted boundary curve.
pub fn policy_value(
    params: &MarketParams<f64>,
    law: &JumpLaw<f64>,
    s0: f64,
    curve: &BoundaryCurve<f64>,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if curve.is_empty() {
        return Err(Error::InsufficientData("empty boundary curve".into()));
    }
    policy_value_with(params, law, s0, |tau| curve.interpolate(tau), n_paths, n_steps, seed)
}
