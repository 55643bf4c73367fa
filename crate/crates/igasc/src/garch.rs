//! GARCH(1,1) benchmarks with Gaussian or unit-variance Student-t
//! conditionals: σ²_{t+1} = ω + α y_t² + β σ²_t, σ²_1 = ω / (1 - α - β).
//!
//! These share the reporting and diagnostic formats of the score-driven
//! models so the two classes can be compared on log-likelihood and PIT
//! residuals.

use crate::error::{Error, Result};
use crate::estimate::{maximize, FitOptions, FitReport, NU_FLOOR, SHORT_DATA_FLOOR};
use crate::specfun;

const LN_2PI: f64 = 1.8378770664093454835606594728112;

/// Conditional distribution of the standardized return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GarchConditional {
    Gaussian,
    StudentT,
}

/// GARCH(1,1) parameters; `nu` present only for the t conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchTheta {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub nu: Option<f64>,
}

impl GarchTheta {
    pub fn new(omega: f64, alpha: f64, beta: f64, nu: Option<f64>) -> Result<GarchTheta> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::domain("omega must be positive"));
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::domain("alpha and beta must be nonnegative"));
        }
        if alpha + beta >= 1.0 {
            return Err(Error::non_stationary(format!(
                "alpha + beta = {} >= 1",
                alpha + beta
            )));
        }
        if let Some(nu) = nu {
            if !(nu > 2.0) {
                return Err(Error::domain("nu must exceed 2"));
            }
        }
        Ok(GarchTheta {
            omega,
            alpha,
            beta,
            nu,
        })
    }

    pub fn conditional(&self) -> GarchConditional {
        if self.nu.is_some() {
            GarchConditional::StudentT
        } else {
            GarchConditional::Gaussian
        }
    }
}

/// Filter output: conditional variance path and log-likelihood.
#[derive(Debug, Clone)]
pub struct GarchOutput {
    pub sigma2: Vec<f64>,
    pub per_obs_loglik: Vec<f64>,
    pub loglik: f64,
}

/// Run the GARCH variance recursion and accumulate the exact likelihood by
/// prediction decomposition.
pub fn garch_filter(data: &[f64], theta: &GarchTheta) -> Result<GarchOutput> {
    GarchTheta::new(theta.omega, theta.alpha, theta.beta, theta.nu)?;
    if data.is_empty() {
        return Err(Error::usage("cannot filter an empty series"));
    }
    if let Some((i, &y)) = data.iter().enumerate().find(|(_, y)| !y.is_finite()) {
        return Err(Error::InvalidObservation {
            index: i,
            reason: format!("observation {y} is not finite"),
        });
    }
    let ln_c = theta.nu.map(|nu| {
        specfun::log_gamma(0.5 * (nu + 1.0))
            - specfun::log_gamma(0.5 * nu)
            - 0.5 * ((nu - 2.0) * std::f64::consts::PI).ln()
    });
    let mut s2 = theta.omega / (1.0 - theta.alpha - theta.beta);
    let mut sigma2 = Vec::with_capacity(data.len());
    let mut per_obs = Vec::with_capacity(data.len());
    let mut loglik = 0.0;
    for &y in data {
        let ll = match (theta.nu, ln_c) {
            (Some(nu), Some(c)) => {
                let e2 = y * y / s2;
                c - 0.5 * (nu + 1.0) * (e2 / (nu - 2.0)).ln_1p() - 0.5 * s2.ln()
            }
            _ => -0.5 * (LN_2PI + s2.ln() + y * y / s2),
        };
        sigma2.push(s2);
        per_obs.push(ll);
        loglik += ll;
        s2 = theta.omega + theta.alpha * y * y + theta.beta * s2;
    }
    Ok(GarchOutput {
        sigma2,
        per_obs_loglik: per_obs,
        loglik,
    })
}

/// PIT residuals Φ(y_t/σ_t) (or the standardized-t CDF), for the same KS
/// diagnostics the score-driven models use.
pub fn garch_pit(data: &[f64], theta: &GarchTheta) -> Result<Vec<f64>> {
    let out = garch_filter(data, theta)?;
    Ok(data
        .iter()
        .zip(&out.sigma2)
        .map(|(&y, &s2)| {
            let e = y / s2.sqrt();
            match theta.nu {
                Some(nu) => specfun::student_t_cdf(e * (nu / (nu - 2.0)).sqrt(), nu),
                None => specfun::std_normal_cdf(e),
            }
        })
        .collect())
}

/// Fitted GARCH model.
#[derive(Debug, Clone)]
pub struct GarchFitResult {
    pub theta: GarchTheta,
    pub report: FitReport,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

// z = (ln omega, logit(alpha+beta), logit(alpha/(alpha+beta)) [, ln(nu-2.001)])
fn garch_from_z(z: &[f64], t: GarchConditional) -> Result<GarchTheta> {
    let omega = z[0].exp();
    let persistence = sigmoid(z[1]);
    let share = sigmoid(z[2]);
    let alpha = persistence * share;
    let beta = persistence * (1.0 - share);
    let nu = match t {
        GarchConditional::StudentT => Some(NU_FLOOR + z[3].exp()),
        GarchConditional::Gaussian => None,
    };
    GarchTheta::new(omega, alpha, beta, nu)
}

fn garch_to_z(theta: &GarchTheta) -> Vec<f64> {
    let s = theta.alpha + theta.beta;
    let mut z = vec![
        theta.omega.ln(),
        logit(s),
        logit((theta.alpha / s).clamp(1e-12, 1.0 - 1e-12)),
    ];
    if let Some(nu) = theta.nu {
        z.push((nu - NU_FLOOR).ln());
    }
    z
}

fn garch_natural(theta: &GarchTheta) -> Vec<f64> {
    let mut v = vec![theta.omega, theta.alpha, theta.beta];
    if let Some(nu) = theta.nu {
        v.push(nu);
    }
    v
}

/// Fit GARCH(1,1) by maximum likelihood with the shared optimizer pipeline.
pub fn garch_fit(
    data: &[f64],
    conditional: GarchConditional,
    opts: &FitOptions,
) -> Result<GarchFitResult> {
    if data.len() < 2 {
        return Err(Error::usage("need at least 2 observations to fit"));
    }
    let n = data.len() as f64;
    let var = data.iter().map(|y| y * y).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::domain("zero-variance data"));
    }
    let start = GarchTheta::new(
        (var * 0.05).max(1e-8),
        0.05,
        0.90,
        match conditional {
            GarchConditional::StudentT => Some(8.0),
            GarchConditional::Gaussian => None,
        },
    )?;
    let z0 = garch_to_z(&start);
    let n_nat = garch_natural(&start).len();
    let mut negloglik = |z: &[f64]| -> f64 {
        match garch_from_z(z, conditional) {
            Ok(theta) => match garch_filter(data, &theta) {
                Ok(out) if out.loglik.is_finite() => -out.loglik,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };
    let natural = |z: &[f64]| -> Vec<f64> {
        match garch_from_z(z, conditional) {
            Ok(theta) => garch_natural(&theta),
            Err(_) => vec![f64::NAN; n_nat],
        }
    };
    let m = maximize(&mut negloglik, &natural, z0, opts);
    let theta = garch_from_z(&m.z, conditional)?;
    let mut names = vec!["omega".to_string(), "alpha".to_string(), "beta".to_string()];
    if conditional == GarchConditional::StudentT {
        names.push("nu".to_string());
    }
    Ok(GarchFitResult {
        theta,
        report: FitReport {
            param_names: names,
            estimates: m.estimates,
            std_errors: m.std_errors,
            ci95: m.ci95,
            loglik: m.loglik,
            converged: m.converged,
            iterations: m.iterations,
            eval_count: m.eval_count,
            short_data: data.len() < SHORT_DATA_FLOOR,
        },
    })
}

/// Simulate a Gaussian GARCH(1,1) path (used in tests and benchmarks; not
/// part of the modeling surface).
pub fn garch_simulate(theta: &GarchTheta, len: usize, seed: u64) -> Result<Vec<f64>> {
    GarchTheta::new(theta.omega, theta.alpha, theta.beta, theta.nu)?;
    let mut stream = crate::rng::Stream::new(seed);
    let mut s2 = theta.omega / (1.0 - theta.alpha - theta.beta);
    let mut y = Vec::with_capacity(len);
    for _ in 0..len {
        let e = match theta.nu {
            Some(nu) => stream.student_t_std(nu),
            None => stream.normal(),
        };
        let yt = s2.sqrt() * e;
        y.push(yt);
        s2 = theta.omega + theta.alpha * yt * yt + theta.beta * s2;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_variance_case() {
        let theta = GarchTheta::new(2.0, 0.0, 0.0, None).unwrap();
        let data = [0.5, -1.0, 2.0];
        let out = garch_filter(&data, &theta).unwrap();
        assert!(out.sigma2.iter().all(|&s| s == 2.0));
        let direct: f64 = data
            .iter()
            .map(|y| -0.5 * (LN_2PI + 2.0f64.ln() + y * y / 2.0))
            .sum();
        assert!((out.loglik - direct).abs() < 1e-12);
    }

    #[test]
    fn hand_unrolled_three_steps() {
        let theta = GarchTheta::new(0.1, 0.2, 0.5, None).unwrap();
        let data = [1.0, -2.0, 0.5];
        let out = garch_filter(&data, &theta).unwrap();
        let s1 = 0.1 / 0.3;
        let s2 = 0.1 + 0.2 * 1.0 + 0.5 * s1;
        let s3 = 0.1 + 0.2 * 4.0 + 0.5 * s2;
        assert!((out.sigma2[0] - s1).abs() < 1e-12);
        assert!((out.sigma2[1] - s2).abs() < 1e-12);
        assert!((out.sigma2[2] - s3).abs() < 1e-12);
        let ll: f64 = [(1.0, s1), (-2.0, s2), (0.5, s3)]
            .iter()
            .map(|&(y, s): &(f64, f64)| -0.5 * (LN_2PI + s.ln() + y * y / s))
            .sum();
        assert!((out.loglik - ll).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonstationary() {
        assert!(GarchTheta::new(0.1, 0.5, 0.5, None).is_err());
        assert!(GarchTheta::new(0.0, 0.1, 0.5, None).is_err());
        assert!(GarchTheta::new(0.1, -0.1, 0.5, None).is_err());
        assert!(GarchTheta::new(0.1, 0.1, 0.5, Some(1.5)).is_err());
    }

    #[test]
    fn t_conditional_approaches_gaussian() {
        let g = GarchTheta::new(0.05, 0.1, 0.85, None).unwrap();
        let t = GarchTheta::new(0.05, 0.1, 0.85, Some(2e6)).unwrap();
        let data = garch_simulate(&g, 2_000, 5).unwrap();
        let lg = garch_filter(&data, &g).unwrap().loglik;
        let lt = garch_filter(&data, &t).unwrap().loglik;
        assert!((lg - lt).abs() < 1e-2, "{lg} vs {lt}");
    }

    #[test]
    fn transform_round_trip() {
        let theta = GarchTheta::new(0.07, 0.12, 0.8, Some(7.5)).unwrap();
        let z = garch_to_z(&theta);
        let back = garch_from_z(&z, GarchConditional::StudentT).unwrap();
        assert!((back.omega - theta.omega).abs() < 1e-12);
        assert!((back.alpha - theta.alpha).abs() < 1e-12);
        assert!((back.beta - theta.beta).abs() < 1e-12);
        assert!((back.nu.unwrap() - 7.5).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_simulated_parameters() {
        let truth = GarchTheta::new(0.05, 0.1, 0.85, None).unwrap();
        let data = garch_simulate(&truth, 20_000, 42).unwrap();
        let opts = FitOptions::default();
        let fit = garch_fit(&data, GarchConditional::Gaussian, &opts).unwrap();
        assert!(fit.report.converged);
        let se = fit.report.std_errors.as_ref().expect("standard errors");
        for (i, &truev) in [0.05, 0.1, 0.85].iter().enumerate() {
            let d = (fit.report.estimates[i] - truev).abs();
            assert!(
                d < 3.0 * se[i].max(1e-3),
                "param {i}: {} vs {truev} (se {})",
                fit.report.estimates[i],
                se[i]
            );
        }
        // persistence constraint holds at the optimum
        assert!(fit.theta.alpha + fit.theta.beta < 1.0);
    }
}
