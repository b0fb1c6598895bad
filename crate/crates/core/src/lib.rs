//! American put pricing under jump diffusions as a free-boundary problem.
//!
//! The value function is solved in log-price `x` and time-to-maturity `t`,
//! where the continuation region is `x > b(t)` and the exercise region is
//! `x <= b(t)`. Besides pricing, the crate measures the regularity of the
//! exercise boundary `b(t)`: monotonicity, smooth fit, the limit at maturity,
//! a Hölder exponent and the consistency of the `b'(t)` quotient identity.
//!
//! The numerical core is generic over [`Real`]; `f64` aliases are exported
//! at the crate root for the common case. The Monte Carlo oracle is `f64`
//! only.

pub mod boundary;
pub mod error;
pub mod fixedpoint;
pub mod io;
pub mod mc_oracle;
pub mod model;
pub mod reference;
pub mod scalar;
pub mod solver;
pub mod verify;
pub mod volterra;

pub use error::{Error, Result};
pub use scalar::Real;

pub use boundary::{BoundaryCurve, DiagnosticsReport, ExtractionMethod};
pub use fixedpoint::IterationTrace;
pub use model::{JumpLaw, MarketParams, ModelSummary, Volatility};
pub use solver::{Grid, JumpOperator, Scheme, SolutionSurface, SolverOptions};

/// Tool version embedded in every exported artifact.
pub const VERSION: &str = concat!("freebound ", env!("CARGO_PKG_VERSION"));

pub type MarketParams64 = MarketParams<f64>;
pub type JumpLaw64 = JumpLaw<f64>;
pub type Grid64 = Grid<f64>;
pub type SolutionSurface64 = SolutionSurface<f64>;
pub type BoundaryCurve64 = BoundaryCurve<f64>;
pub type SolverOptions64 = SolverOptions<f64>;

pub type MarketParams32 = MarketParams<f32>;
pub type JumpLaw32 = JumpLaw<f32>;
pub type Grid32 = Grid<f32>;
pub type SolutionSurface32 = SolutionSurface<f32>;
