//! Predictive densities.
//!
//! Given data through time t, the state α_{t+h} is Gaussian in closed form,
//! so the h-step predictive density of the observation is a univariate
//! mixture: f(y_{t+h} | y_{1:t}) = ∫ f(y | α) N(α; m_h, v_h) dα. The mixture
//! is integrated by Gauss-Hermite quadrature in α-space (50 nodes by
//! default), which keeps duration supports positive automatically. At h = 1
//! the state is known and the mixture collapses to the conditional density.
//!
//! The joint multivariate forecast has no closed form for h ≥ 2 and is
//! sampled by path simulation instead.

use crate::error::{Error, Result};
use crate::mv::MvTheta;
use crate::obs::{Family, ObsModel, Theta};
use crate::par;
use crate::rng::{derive_seed, Stream};
use crate::specfun::gauss_hermite;
use crate::state::{self, StateForecast};

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_NODES: usize = 50;

/// An h-step predictive distribution: Gaussian state law mixed over the
/// observation conditional.
#[derive(Debug, Clone)]
pub struct PredictiveDensity {
    pub family: Family,
    pub state_forecast: StateForecast,
    obs: ObsModel,
    /// (state node, normalized weight) pairs; empty at horizon 1.
    nodes: Vec<(f64, f64)>,
}

/// Build the h-step predictive density anchored at the filtered next state
/// α_{t+1} (pass `filter(...)?.alpha_next`).
pub fn predictive(
    family: Family,
    theta: &Theta,
    alpha_next: f64,
    horizon: usize,
    n_nodes: usize,
) -> Result<PredictiveDensity> {
    let ar = theta
        .state
        .as_ar()
        .ok_or_else(|| Error::usage("closed-form forecasting needs an AR(1) state"))?;
    if n_nodes == 0 {
        return Err(Error::usage("need at least one quadrature node"));
    }
    let obs = ObsModel::new(family, theta)?;
    let sf = state::forecast_state(ar, alpha_next, horizon)?;
    let nodes = if sf.variance > 0.0 {
        let (x, w) = gauss_hermite(n_nodes);
        let scale = (2.0 * sf.variance).sqrt();
        let norm = std::f64::consts::PI.sqrt();
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| (sf.mean + scale * xi, wi / norm))
            .collect()
    } else {
        Vec::new()
    };
    Ok(PredictiveDensity {
        family,
        state_forecast: sf,
        obs,
        nodes,
    })
}

impl PredictiveDensity {
    fn check_support(&self, y: f64) -> Result<()> {
        self.obs.validate_obs(y).map_err(Error::Domain)
    }

    /// Predictive density at y.
    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        if self.nodes.is_empty() {
            return Ok(self.obs.cond_logpdf(y, self.state_forecast.mean).exp());
        }
        let mut s = 0.0;
        for &(a, w) in &self.nodes {
            s += w * self.obs.cond_logpdf(y, a).exp();
        }
        Ok(s)
    }

    /// Predictive CDF at y (mixture of conditional CDFs).
    pub fn cdf(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        if self.nodes.is_empty() {
            return Ok(self.obs.pit(y, self.state_forecast.mean));
        }
        let mut s = 0.0;
        for &(a, w) in &self.nodes {
            s += w * self.obs.pit(y, a);
        }
        Ok(s)
    }

    /// Predictive quantile by bisection on the quadrature CDF, to 1e-8.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level {p} outside (0,1)")));
        }
        let (mut lo, mut hi) = self.bracket(p)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-8 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn bracket(&self, p: f64) -> Result<(f64, f64)> {
        let m = self.moments()?;
        let sd = m.variance.max(1e-12).sqrt();
        if self.family.is_duration() {
            let mut hi = m.mean + 8.0 * sd;
            for _ in 0..60 {
                if self.cdf(hi)? >= p {
                    break;
                }
                hi *= 2.0;
            }
            Ok((1e-300, hi))
        } else {
            let mut lo = m.mean - 8.0 * sd;
            let mut hi = m.mean + 8.0 * sd;
            for _ in 0..60 {
                if self.cdf(lo)? <= p {
                    break;
                }
                lo -= 4.0 * sd;
            }
            for _ in 0..60 {
                if self.cdf(hi)? >= p {
                    break;
                }
                hi += 4.0 * sd;
            }
            Ok((lo, hi))
        }
    }

    /// Closed-form predictive moments via log-normal mixing of the
    /// conditional moments. Kurtosis is None where the fourth conditional
    /// moment does not exist (t-volatility with ν ≤ 4).
    pub fn moments(&self) -> Result<PredictiveMoments> {
        let m = self.state_forecast.mean;
        let v = self.state_forecast.variance;
        // E[e^{c alpha}] for alpha ~ N(m, v)
        let state_mgf = |c: f64| (c * m + 0.5 * c * c * v).exp();
        // raw conditional moments of eps
        let eps_moment = |j: u32| -> Option<f64> {
            match self.obs.family {
                Family::GaussVol => Some(match j {
                    1 | 3 => 0.0,
                    2 => 1.0,
                    4 => 3.0,
                    _ => unreachable!(),
                }),
                Family::TVol => {
                    let nu = self.obs.shape_raw();
                    match j {
                        1 | 3 => Some(0.0),
                        2 => Some(1.0),
                        4 => {
                            if nu > 4.0 {
                                Some(3.0 * (nu - 2.0) / (nu - 4.0))
                            } else {
                                None
                            }
                        }
                        _ => unreachable!(),
                    }
                }
                Family::ExpDur => Some(match j {
                    1 => 1.0,
                    2 => 2.0,
                    3 => 6.0,
                    4 => 24.0,
                    _ => unreachable!(),
                }),
                Family::WeibullDur => {
                    let k = self.obs.shape_raw();
                    let beta = self.obs.weibull_scale();
                    Some(
                        (beta.powi(j as i32))
                            * (crate::specfun::log_gamma(1.0 + j as f64 / k)).exp(),
                    )
                }
            }
        };
        // raw moment of y: E[e^{j alpha / 2}] E[eps^j] for volatility,
        // E[e^{j alpha}] E[eps^j] for durations
        let link = if self.family.is_volatility() {
            0.5
        } else {
            1.0
        };
        let raw = |j: u32| eps_moment(j).map(|e| state_mgf(link * j as f64) * e);
        let m1 = raw(1).expect("first moment always defined");
        let m2 = raw(2).expect("second moment always defined");
        let variance = m2 - m1 * m1;
        let kurtosis = match (raw(3), raw(4)) {
            (Some(m3), Some(m4)) => {
                let mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
                if variance > 0.0 {
                    Some(mu4 / (variance * variance))
                } else {
                    None
                }
            }
            _ => None,
        };
        Ok(PredictiveMoments {
            mean: m1,
            variance,
            kurtosis,
        })
    }
}

/// Moments of the h-step predictive distribution.
#[derive(Debug, Clone, Copy)]
pub struct PredictiveMoments {
    pub mean: f64,
    pub variance: f64,
    pub kurtosis: Option<f64>,
}

/// Simulation-based joint h-step forecast for the multivariate model:
/// `n_paths` independent draws of the N-vector y_{t+h}. At h = 1 this is
/// exact sampling from N(0, DΣD); beyond that, states are propagated with
/// the innovation map along each path. Deterministic given the seed.
pub fn mv_forecast(
    theta: &MvTheta,
    alpha_next: &[f64],
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = theta.dim();
    if alpha_next.len() != n {
        return Err(Error::usage(format!(
            "alpha_next has {} entries for {n} series",
            alpha_next.len()
        )));
    }
    if horizon < 1 {
        return Err(Error::usage("forecast horizon must be >= 1"));
    }
    if n_paths == 0 {
        return Err(Error::usage("need at least one path"));
    }
    let chol = theta.corr.chol_lower().to_vec();
    let paths: Vec<Result<Vec<f64>>> = par::map_indexed(n_paths, |p| {
        let mut stream = Stream::new(derive_seed(seed, p as u64));
        let mut a = alpha_next.to_vec();
        for step in 1..=horizon {
            let z: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut e = 0.0;
                for k in 0..=i {
                    e += chol[i * n + k] * z[k];
                }
                y[i] = e * (0.5 * a[i]).exp();
            }
            if step == horizon {
                return Ok(y);
            }
            let (_, eta) = crate::mv::mv_innovation(&y, &a, theta)?;
            for i in 0..n {
                a[i] = state::step_ar1(&theta.series[i], a[i], eta[i]);
            }
        }
        unreachable!("loop returns at step == horizon")
    });
    paths.into_iter().collect()
}

/// Forecast summaries for a univariate fit, one row per horizon:
/// (horizon, mean, sd, q05, q50, q95).
pub fn forecast_table(
    family: Family,
    theta: &Theta,
    alpha_next: f64,
    horizons: &[usize],
    n_nodes: usize,
) -> Result<Vec<(usize, f64, f64, f64, f64, f64)>> {
    let mut rows = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let pd = predictive(family, theta, alpha_next, h, n_nodes)?;
        let m = pd.moments()?;
        rows.push((
            h,
            m.mean,
            m.variance.max(0.0).sqrt(),
            pd.quantile(0.05)?,
            pd.quantile(0.50)?,
            pd.quantile(0.95)?,
        ));
    }
    Ok(rows)
}
