//! Exact simulation of the data-generating process, and the Monte Carlo
//! study harness (simulate + fit over a grid of series lengths).
//!
//! Simulation mirrors the filter exactly: the innovation (u_t, η_t) is
//! computed from the generated observation through the same map the filter
//! applies, so filtering simulated data recovers the simulated innovations
//! bit for bit. Replication r draws from sub-stream r of the master seed and
//! aggregation is done in replication order with compensated summation, so
//! study results do not depend on thread count.

use crate::error::{Error, Result};
use crate::estimate::{fit, initial_values_with_offset, FitOptions};
use crate::filter::FilterInit;
use crate::mv::MvTheta;
use crate::obs::{Family, ObsModel, Theta};
use crate::par;
use crate::rng::{derive_seed, Stream};
use crate::state::{self, StateSpec};

/// Configuration of one simulated path.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub family: Family,
    pub theta: Theta,
    /// Number of observations returned.
    pub len: usize,
    /// Steps discarded before recording. The AR(1) state starts from an
    /// exact stationary draw, so 0 is the natural default.
    pub burn_in: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(family: Family, theta: Theta, len: usize, seed: u64) -> SimConfig {
        SimConfig {
            family,
            theta,
            len,
            burn_in: 0,
            seed,
        }
    }
}

/// A simulated path with everything the DGP produced along the way.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    pub eps: Vec<f64>,
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
    /// Newest-first state history at the first recorded observation,
    /// suitable for [`FilterInit::FixedHistory`]: filtering `y` from it
    /// reproduces `alpha`, `u`, and `eta` exactly.
    pub init_history: Vec<f64>,
}

/// Simulate one path. α_1 is drawn from the stationary law N(μ_α, σ_α²)
/// (for ARMA states, the initial p-block comes from the stationary joint
/// law with pre-sample innovations at zero), then the recursion alternates
/// drawing ε_t, forming y_t, and stepping the state with η_t.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    if cfg.len == 0 {
        return Err(Error::usage("simulation length must be positive"));
    }
    let obs = ObsModel::new(cfg.family, &cfg.theta)?;
    let moments = state::stationary_moments(&cfg.theta.state)?;
    let mut stream = Stream::new(cfg.seed);

    let total = cfg.len + cfg.burn_in;
    let mut y = Vec::with_capacity(cfg.len);
    let mut alpha = Vec::with_capacity(cfg.len);
    let mut eps = Vec::with_capacity(cfg.len);
    let mut u = Vec::with_capacity(cfg.len);
    let mut eta = Vec::with_capacity(cfg.len);
    let mut init_history = Vec::new();

    match &cfg.theta.state {
        StateSpec::Ar(ar) => {
            let mut a = moments.mu_alpha + moments.sigma2_alpha.sqrt() * stream.normal();
            for t in 0..total {
                if t == cfg.burn_in {
                    init_history = vec![a];
                }
                let e = obs.draw_eps(&mut stream);
                let yt = obs.y_from_eps(e, a);
                let (ut, et) = obs.innovation(yt, a);
                if t >= cfg.burn_in {
                    y.push(yt);
                    alpha.push(a);
                    eps.push(e);
                    u.push(ut);
                    eta.push(et);
                }
                a = state::step_ar1(ar, a, et);
            }
        }
        StateSpec::Arma(arma) => {
            let p = arma.p();
            let q = arma.q();
            // stationary joint draw for the initial state block
            let mut cov = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..p {
                    cov[i * p + j] = arma.autocovariance(i.abs_diff(j));
                }
            }
            let chol = crate::linalg::cholesky_lower(p, &cov)
                .ok_or_else(|| Error::domain("stationary block not positive definite"))?;
            let z: Vec<f64> = (0..p).map(|_| stream.normal()).collect();
            let mut alpha_hist = vec![moments.mu_alpha; p];
            for i in 0..p {
                for k in 0..=i {
                    alpha_hist[i] += chol[i * p + k] * z[k];
                }
            }
            let mut eta_hist = vec![0.0; q + 1];
            for t in 0..total {
                if t == cfg.burn_in {
                    init_history = alpha_hist.clone();
                }
                let a = alpha_hist[0];
                let e = obs.draw_eps(&mut stream);
                let yt = obs.y_from_eps(e, a);
                let (ut, et) = obs.innovation(yt, a);
                if t >= cfg.burn_in {
                    y.push(yt);
                    alpha.push(a);
                    eps.push(e);
                    u.push(ut);
                    eta.push(et);
                }
                eta_hist.rotate_right(1);
                eta_hist[0] = et;
                let next = state::step_arma(arma, &alpha_hist[..p], &eta_hist)?;
                alpha_hist.rotate_right(1);
                alpha_hist[0] = next;
            }
        }
    }
    Ok(SimOutput {
        y,
        alpha,
        eps,
        u,
        eta,
        init_history,
    })
}

/// Multivariate simulation output; rows are time steps.
#[derive(Debug, Clone)]
pub struct MvSimOutput {
    pub y: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
}

/// Simulate the multivariate Gaussian volatility model: ε_t = L z_t with L
/// the Cholesky factor of Σ, y_it = e^{α_it/2} ε_it, per-series marginal
/// score innovations. Initial states are per-series stationary draws.
pub fn simulate_mv(theta: &MvTheta, len: usize, burn_in: usize, seed: u64) -> Result<MvSimOutput> {
    if len == 0 {
        return Err(Error::usage("simulation length must be positive"));
    }
    let n = theta.dim();
    let mut stream = Stream::new(seed);
    let mut a: Vec<f64> = Vec::with_capacity(n);
    for s in &theta.series {
        let m = state::stationary_moments(&StateSpec::Ar(*s))?;
        a.push(m.mu_alpha + m.sigma2_alpha.sqrt() * stream.normal());
    }
    let chol = theta.corr.chol_lower().to_vec();
    let total = len + burn_in;
    let mut y = Vec::with_capacity(len);
    let mut alpha = Vec::with_capacity(len);
    let mut eta_out = Vec::with_capacity(len);
    for t in 0..total {
        let z: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
        let mut yt = vec![0.0; n];
        for i in 0..n {
            let mut e = 0.0;
            for k in 0..=i {
                e += chol[i * n + k] * z[k];
            }
            yt[i] = e * (0.5 * a[i]).exp();
        }
        let (_, eta) = crate::mv::mv_innovation(&yt, &a, theta)?;
        if t >= burn_in {
            y.push(yt.clone());
            alpha.push(a.clone());
            eta_out.push(eta.clone());
        }
        for i in 0..n {
            a[i] = state::step_ar1(&theta.series[i], a[i], eta[i]);
        }
    }
    Ok(MvSimOutput {
        y,
        alpha,
        eta: eta_out,
    })
}

/// One row of a Monte Carlo study: statistics of one parameter at one T.
#[derive(Debug, Clone)]
pub struct McRow {
    pub family: Family,
    pub t: usize,
    pub parameter: String,
    pub true_value: f64,
    pub mean: f64,
    pub variance: f64,
    pub bias: f64,
    pub mse: f64,
    pub n_converged: usize,
    pub n_replications: usize,
}

/// Aggregated study results over a grid of series lengths.
#[derive(Debug, Clone)]
pub struct McStudyResult {
    pub rows: Vec<McRow>,
}

impl McStudyResult {
    /// Rows for one series length, in parameter order.
    pub fn rows_for(&self, t: usize) -> Vec<&McRow> {
        self.rows.iter().filter(|r| r.t == t).collect()
    }

    /// Machine-readable table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,T,parameter,true,mean,variance,bias,mse,n_converged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.family,
                r.t,
                r.parameter,
                r.true_value,
                r.mean,
                r.variance,
                r.bias,
                r.mse,
                r.n_converged
            ));
        }
        out
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Run a Monte Carlo study: for each T in the grid, simulate `replications`
/// datasets at `true_theta`, fit each from moment-based starts, and
/// aggregate mean/variance/bias/MSE per parameter. Replications that fail to
/// converge are excluded and counted. Deterministic for a fixed seed,
/// independent of thread count.
pub fn mc_study(
    family: Family,
    true_theta: &Theta,
    t_grid: &[usize],
    replications: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<McStudyResult> {
    if replications < 2 {
        return Err(Error::usage("need at least 2 replications"));
    }
    if t_grid.is_empty() {
        return Err(Error::usage("empty T grid"));
    }
    // validate up front
    ObsModel::new(family, true_theta)?;
    let truth = true_params(family, true_theta)?;
    let names = param_labels(family);

    let mut rows = Vec::new();
    for (ti, &t_len) in t_grid.iter().enumerate() {
        let estimates: Vec<Option<Vec<f64>>> = par::map_indexed(replications, |r| {
            let rep_seed = derive_seed(seed, ((ti as u64) << 32) | r as u64);
            let cfg = SimConfig::new(family, true_theta.clone(), t_len, rep_seed);
            let sim = simulate(&cfg).ok()?;
            let start = initial_values_with_offset(family, &sim.y, true_theta.offset).ok()?;
            let fitted = fit(family, &sim.y, Some(start), opts).ok()?;
            if fitted.report.converged {
                Some(fitted.report.estimates)
            } else {
                None
            }
        });
        let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
        let n_conv = ok.len();
        if n_conv == 0 {
            return Err(Error::StudyFailed);
        }
        let nf = n_conv as f64;
        for (pi, name) in names.iter().enumerate() {
            let mean = kahan_sum(ok.iter().map(|e| e[pi])) / nf;
            let variance = kahan_sum(ok.iter().map(|e| (e[pi] - mean).powi(2))) / nf;
            let mse = kahan_sum(ok.iter().map(|e| (e[pi] - truth[pi]).powi(2))) / nf;
            rows.push(McRow {
                family,
                t: t_len,
                parameter: name.clone(),
                true_value: truth[pi],
                mean,
                variance,
                bias: mean - truth[pi],
                mse,
                n_converged: n_conv,
                n_replications: replications,
            });
        }
    }
    Ok(McStudyResult { rows })
}

fn true_params(family: Family, theta: &Theta) -> Result<Vec<f64>> {
    let ar = theta
        .state
        .as_ar()
        .ok_or_else(|| Error::usage("mc_study works on AR(1) specifications"))?;
    let mut v = vec![ar.mu, ar.phi, ar.psi];
    if family.has_shape() {
        v.push(theta.shape.ok_or_else(|| Error::usage("missing shape"))?);
    }
    Ok(v)
}

fn param_labels(family: Family) -> Vec<String> {
    let mut names = vec!["mu".to_string(), "phi".to_string(), "psi".to_string()];
    if let Some(s) = family.shape_name() {
        names.push(s.to_string());
    }
    names
}

/// Simulate, then filter the simulated data from the recorded initial
/// state. The filter is the exact inverse of the simulation, so the output
/// pair carries identical state and innovation paths.
pub fn simulate_and_filter(cfg: &SimConfig) -> Result<(SimOutput, crate::filter::FilterOutput)> {
    let sim = simulate(cfg)?;
    let out = crate::filter::filter_with_init(
        cfg.family,
        &sim.y,
        &cfg.theta,
        FilterInit::FixedHistory(sim.init_history.clone()),
    )?;
    Ok((sim, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta() -> Theta {
        Theta::ar(0.3, 0.2, 0.7).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::new(Family::GaussVol, theta(), 500, 42);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.y.len(), 500);
        for t in 0..500 {
            assert_eq!(a.y[t].to_bits(), b.y[t].to_bits());
            assert_eq!(a.eta[t].to_bits(), b.eta[t].to_bits());
        }
        let c = simulate(&SimConfig::new(Family::GaussVol, theta(), 500, 43)).unwrap();
        assert_ne!(a.y[0].to_bits(), c.y[0].to_bits());
    }

    #[test]
    fn psi_zero_freezes_state() {
        let cfg = SimConfig::new(Family::GaussVol, Theta::ar(0.4, 0.0, 0.0).unwrap(), 200, 7);
        let sim = simulate(&cfg).unwrap();
        assert!(sim.alpha.iter().all(|&a| a == 0.4));
    }

    #[test]
    fn burn_in_shifts_the_path() {
        let mut cfg = SimConfig::new(Family::ExpDur, theta(), 50, 11);
        let a = simulate(&cfg).unwrap();
        cfg.burn_in = 10;
        let b = simulate(&cfg).unwrap();
        assert_eq!(b.y.len(), 50);
        // burn-in consumes the same stream, so the recorded paths differ
        assert_ne!(a.y[0].to_bits(), b.y[0].to_bits());
    }

    #[test]
    fn filter_recovers_simulated_innovations() {
        for family in [
            Family::GaussVol,
            Family::TVol,
            Family::ExpDur,
            Family::WeibullDur,
        ] {
            let th = match family {
                Family::TVol => theta().with_shape(10.0),
                Family::WeibullDur => theta().with_shape(2.0),
                _ => theta(),
            };
            let cfg = SimConfig::new(family, th, 2_000, 19);
            let (sim, out) = simulate_and_filter(&cfg).unwrap();
            for t in 0..2_000 {
                assert!(
                    (sim.eta[t] - out.eta[t]).abs() < 1e-10,
                    "{family}: eta mismatch at t={t}: {} vs {}",
                    sim.eta[t],
                    out.eta[t]
                );
                assert!((sim.u[t] - out.u[t]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stationary_marginals_match_closed_form() {
        let cfg = SimConfig::new(Family::GaussVol, theta(), 200_000, 3);
        let sim = simulate(&cfg).unwrap();
        let n = sim.alpha.len() as f64;
        let mean = sim.alpha.iter().sum::<f64>() / n;
        let var = sim
            .alpha
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        // mu_alpha = 0.375, sigma2_alpha = 0.5104...; 3 MC standard errors
        let se_mean = (0.5104 / n).sqrt() * (1.0f64 + 2.0 * 0.2 / 0.8).sqrt();
        assert!((mean - 0.375).abs() < 4.0 * se_mean, "mean {mean}");
        assert!((var - 0.49 / 0.96).abs() < 0.02, "var {var}");
    }

    #[test]
    fn mv_simulation_has_requested_shape() {
        use crate::mv::CorrMatrix;
        use crate::state::ArSpec;
        let theta = MvTheta::new(
            vec![
                ArSpec::new(0.3, 0.2, 0.7).unwrap(),
                ArSpec::new(0.1, 0.5, 0.3).unwrap(),
            ],
            CorrMatrix::new(2, vec![1.0, 0.6, 0.6, 1.0]).unwrap(),
        )
        .unwrap();
        let sim = simulate_mv(&theta, 5_000, 0, 21).unwrap();
        assert_eq!(sim.y.len(), 5_000);
        assert_eq!(sim.y[0].len(), 2);
        // epsilon correlation should be near 0.6
        let mut num = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for t in 0..5_000 {
            let e1 = sim.y[t][0] * (-0.5 * sim.alpha[t][0]).exp();
            let e2 = sim.y[t][1] * (-0.5 * sim.alpha[t][1]).exp();
            num += e1 * e2;
            d1 += e1 * e1;
            d2 += e2 * e2;
        }
        let corr = num / (d1 * d2).sqrt();
        assert!((corr - 0.6).abs() < 0.05, "eps correlation {corr}");
    }

    #[test]
    fn mc_study_is_deterministic_and_consistent() {
        let opts = FitOptions {
            max_evals_per_stage: 2_000,
            ..FitOptions::default()
        };
        let run = || mc_study(Family::GaussVol, &theta(), &[400], 4, 123, &opts).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.rows.len(), 3);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.mean.to_bits(), rb.mean.to_bits());
            assert_eq!(ra.mse.to_bits(), rb.mse.to_bits());
            // mse = variance + bias^2
            assert!(
                (ra.mse - (ra.variance + ra.bias * ra.bias)).abs() < 1e-10,
                "mse identity violated"
            );
        }
        let csv = a.to_csv();
        assert!(csv.starts_with("family,T,parameter,true,mean,variance,bias,mse,n_converged"));
        assert_eq!(csv.lines().count(), 4);
    }
}
