//! Score-driven time-series models with Gaussian copula innovations.
//!
//! The model family covered here evolves a time-varying parameter α_t
//! (log-variance for volatility models, log-scale for duration models) as a
//! Gaussian AR(1) or ARMA(p,q), driven by innovations obtained from the
//! conditional score: the score of the observation density is pushed through
//! its own CDF to a uniform variate and then through the normal quantile, so
//! η_t is exactly standard normal under the model. Because α_t is a
//! deterministic function of past observations, the likelihood is available
//! in closed form through the prediction decomposition.
//!
//! Modules:
//! - [`specfun`]: self-contained special functions (erf, normal quantile,
//!   incomplete beta/gamma, score CDFs, Gauss-Hermite nodes).
//! - [`state`]: AR(1)/ARMA state dynamics, stationarity, state forecasts.
//! - [`obs`]: the four observation families (Gaussian and Student-t
//!   volatility, Exponential and Weibull duration).
//! - [`filter`]: the exact filtering recursion and log-likelihood.
//! - [`mv`]: the multivariate Gaussian volatility model.
//! - [`estimate`]: maximum likelihood with numerical-Hessian standard errors.
//! - [`simulate`]: exact data-generating-process simulation and the Monte
//!   Carlo study harness.
//! - [`forecast`]: one- and multi-step predictive densities.
//! - [`diagnostics`]: PIT residuals, Kolmogorov-Smirnov uniformity, analytic
//!   marginal properties.
//! - [`garch`]: GARCH(1,1) and GARCH(1,1)-t benchmarks.
//!
//! The `parallel` feature (on by default) runs Monte Carlo replications and
//! path simulation on a rayon pool; without it everything falls back to
//! sequential loops with identical, bit-reproducible output.

pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod filter;
pub mod forecast;
pub mod garch;
pub mod mv;
pub mod obs;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod specfun;
pub mod state;

mod linalg;
mod optim;

pub use error::{Error, Result};
pub use obs::{Family, Theta};
pub use state::{ArSpec, ArmaSpec, StateSpec};
