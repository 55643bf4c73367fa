//! The filtering recursion and exact log-likelihood.
//!
//! Because the state is a deterministic function of past observations, the
//! likelihood factorizes exactly: ℓ(θ) = Σ_t ln f(y_t | α_t; θ). One pass
//! over the data yields the filtered states, the innovations (u_t, η_t), and
//! the per-observation log-likelihood terms. The recursion is strictly
//! sequential within a series; parallelism lives across series and
//! replications.

use crate::error::{Error, Result};
use crate::mv::{mv_cond_logpdf, mv_innovation, MvTheta};
use crate::obs::{Family, ObsModel, Theta};
use crate::rng::Stream;
use crate::state::{self, StateSpec};

/// Output of one filtering pass.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// Filtered states α_1..α_T.
    pub alpha: Vec<f64>,
    /// The next state α_{T+1}, already determined by the data.
    pub alpha_next: f64,
    /// Standardized residuals ε_t.
    pub eps: Vec<f64>,
    /// Copula uniforms u_t.
    pub u: Vec<f64>,
    /// Gaussian innovations η_t.
    pub eta: Vec<f64>,
    /// Per-observation log-likelihood terms.
    pub per_obs_loglik: Vec<f64>,
    /// Total log-likelihood (sum of the terms above).
    pub loglik: f64,
}

/// Initialization of the state recursion.
#[derive(Debug, Clone)]
pub enum FilterInit {
    /// Pre-sample states at μ_α, pre-sample innovations at zero.
    Deterministic,
    /// Explicit newest-first state history: the first entry is α_1, the
    /// rest (for ARMA states) are the pre-sample α_0, α_{-1}, ... Filtering
    /// simulated data from its recorded α_1 inverts the simulation exactly.
    FixedHistory(Vec<f64>),
    /// Average the likelihood over draws of (α_1, ..., α_p) from the
    /// stationary joint law; filtered series come from the deterministic
    /// pass, the log-likelihood is the log of the averaged likelihood.
    StationaryAverage { draws: usize, seed: u64 },
}

/// Run the filter with deterministic initialization.
pub fn filter(family: Family, data: &[f64], theta: &Theta) -> Result<FilterOutput> {
    filter_with_init(family, data, theta, FilterInit::Deterministic)
}

/// Run the filter with an explicit initialization mode.
pub fn filter_with_init(
    family: Family,
    data: &[f64],
    theta: &Theta,
    init: FilterInit,
) -> Result<FilterOutput> {
    if data.is_empty() {
        return Err(Error::usage("cannot filter an empty series"));
    }
    let obs = ObsModel::new(family, theta)?;
    let moments = state::stationary_moments(&theta.state)?;
    for (i, &y) in data.iter().enumerate() {
        obs.validate_obs(y)
            .map_err(|reason| Error::InvalidObservation { index: i, reason })?;
    }
    match (&theta.state, init) {
        (_, FilterInit::FixedHistory(hist)) => {
            let need = match &theta.state {
                StateSpec::Ar(_) => 1,
                StateSpec::Arma(s) => s.p().max(1),
            };
            if hist.len() != need {
                return Err(Error::usage(format!(
                    "initial history needs {need} states, got {}",
                    hist.len()
                )));
            }
            if hist.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("initial state history must be finite"));
            }
            filter_pass(&obs, data, &theta.state, &hist)
        }
        (StateSpec::Ar(_), _) | (StateSpec::Arma(_), FilterInit::Deterministic) => {
            let init_alpha = initial_history(&theta.state, moments.mu_alpha);
            filter_pass(&obs, data, &theta.state, &init_alpha)
        }
        (StateSpec::Arma(spec), FilterInit::StationaryAverage { draws, seed }) => {
            if draws == 0 {
                return Err(Error::usage("StationaryAverage needs at least one draw"));
            }
            let p = spec.p();
            let chol = stationary_block_chol(spec, p)?;
            let mut stream = Stream::new(seed);
            let mut logliks = Vec::with_capacity(draws);
            for _ in 0..draws {
                let z: Vec<f64> = (0..p).map(|_| stream.normal()).collect();
                // newest-first history: entry 0 is alpha_1
                let mut hist = vec![moments.mu_alpha; p];
                for i in 0..p {
                    let mut v = 0.0;
                    for k in 0..=i {
                        v += chol[i * p + k] * z[k];
                    }
                    // draw i is alpha_{1-i}; correlated through the Toeplitz block
                    hist[i] += v;
                }
                let out = filter_pass(&obs, data, &theta.state, &hist)?;
                logliks.push(out.loglik);
            }
            // log of the averaged likelihood
            let m = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let avg = m + (logliks.iter().map(|l| (l - m).exp()).sum::<f64>() / draws as f64).ln();
            let init_alpha = initial_history(&theta.state, moments.mu_alpha);
            let mut out = filter_pass(&obs, data, &theta.state, &init_alpha)?;
            out.loglik = avg;
            Ok(out)
        }
    }
}

fn initial_history(spec: &StateSpec, mu_alpha: f64) -> Vec<f64> {
    match spec {
        StateSpec::Ar(_) => vec![mu_alpha],
        StateSpec::Arma(s) => vec![mu_alpha; s.p().max(1)],
    }
}

/// Core recursion. `init_alpha` is the newest-first pre-sample state history
/// whose first entry is α_1.
fn filter_pass(
    obs: &ObsModel,
    data: &[f64],
    spec: &StateSpec,
    init_alpha: &[f64],
) -> Result<FilterOutput> {
    let t_len = data.len();
    let mut alpha = Vec::with_capacity(t_len);
    let mut eps = Vec::with_capacity(t_len);
    let mut u = Vec::with_capacity(t_len);
    let mut eta = Vec::with_capacity(t_len);
    let mut per_obs = Vec::with_capacity(t_len);
    let mut loglik = 0.0;

    match spec {
        StateSpec::Ar(ar) => {
            let mut a = init_alpha[0];
            for (i, &y) in data.iter().enumerate() {
                if !a.is_finite() {
                    return Err(Error::domain(format!("state diverged at observation {i}")));
                }
                let ll = obs.cond_logpdf(y, a);
                let (ut, et) = obs.innovation(y, a);
                alpha.push(a);
                eps.push(obs.standardized(y, a));
                u.push(ut);
                eta.push(et);
                per_obs.push(ll);
                loglik += ll;
                a = state::step_ar1(ar, a, et);
            }
            Ok(FilterOutput {
                alpha,
                alpha_next: a,
                eps,
                u,
                eta,
                per_obs_loglik: per_obs,
                loglik,
            })
        }
        StateSpec::Arma(arma) => {
            let p = arma.p();
            let q = arma.q();
            let mut alpha_hist: Vec<f64> = init_alpha.to_vec(); // newest first
            let mut eta_hist: Vec<f64> = vec![0.0; q + 1];
            for (i, &y) in data.iter().enumerate() {
                let a = alpha_hist[0];
                if !a.is_finite() {
                    return Err(Error::domain(format!("state diverged at observation {i}")));
                }
                let ll = obs.cond_logpdf(y, a);
                let (ut, et) = obs.innovation(y, a);
                alpha.push(a);
                eps.push(obs.standardized(y, a));
                u.push(ut);
                eta.push(et);
                per_obs.push(ll);
                loglik += ll;
                // shift eta history so entry 0 is the current innovation
                eta_hist.rotate_right(1);
                eta_hist[0] = et;
                let next = state::step_arma(arma, &alpha_hist[..p], &eta_hist)?;
                alpha_hist.rotate_right(1);
                alpha_hist[0] = next;
            }
            Ok(FilterOutput {
                alpha,
                alpha_next: alpha_hist[0],
                eps,
                u,
                eta,
                per_obs_loglik: per_obs,
                loglik,
            })
        }
    }
}

/// Cholesky factor of the p×p stationary covariance block of the state.
fn stationary_block_chol(spec: &crate::state::ArmaSpec, p: usize) -> Result<Vec<f64>> {
    let mut cov = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            cov[i * p + j] = spec.autocovariance(i.abs_diff(j));
        }
    }
    crate::linalg::cholesky_lower(p, &cov)
        .ok_or_else(|| Error::domain("stationary covariance block is not positive definite"))
}

/// Multivariate filter output; per-time-step vectors of length N.
#[derive(Debug, Clone)]
pub struct MvFilterOutput {
    pub alpha: Vec<Vec<f64>>,
    pub alpha_next: Vec<f64>,
    pub eps: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub per_obs_loglik: Vec<f64>,
    pub loglik: f64,
}

/// Filter a multivariate series: joint Gaussian likelihood, per-series
/// marginal-score innovations, per-series AR(1) recursions.
pub fn filter_mv(data: &[Vec<f64>], theta: &MvTheta) -> Result<MvFilterOutput> {
    if data.is_empty() {
        return Err(Error::usage("cannot filter an empty series"));
    }
    let n = theta.dim();
    let mut mu_alpha = Vec::with_capacity(n);
    for s in &theta.series {
        let m = state::stationary_moments(&StateSpec::Ar(*s))?;
        mu_alpha.push(m.mu_alpha);
    }
    for (i, row) in data.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidObservation {
                index: i,
                reason: format!("expected {n} components, got {}", row.len()),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObservation {
                index: i,
                reason: "non-finite component".into(),
            });
        }
    }

    let t_len = data.len();
    let mut alpha = Vec::with_capacity(t_len);
    let mut eps = Vec::with_capacity(t_len);
    let mut u = Vec::with_capacity(t_len);
    let mut eta = Vec::with_capacity(t_len);
    let mut per_obs = Vec::with_capacity(t_len);
    let mut loglik = 0.0;

    let mut a = mu_alpha;
    for (i, y) in data.iter().enumerate() {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("state diverged at observation {i}")));
        }
        let ll = mv_cond_logpdf(y, &a, theta)?;
        let (ut, et) = mv_innovation(y, &a, theta)?;
        let eps_t: Vec<f64> = y
            .iter()
            .zip(&a)
            .map(|(&yi, &ai)| yi * (-0.5 * ai).exp())
            .collect();
        alpha.push(a.clone());
        eps.push(eps_t);
        per_obs.push(ll);
        loglik += ll;
        let mut next = Vec::with_capacity(n);
        for k in 0..n {
            next.push(state::step_ar1(&theta.series[k], a[k], et[k]));
        }
        u.push(ut);
        eta.push(et);
        a = next;
    }
    Ok(MvFilterOutput {
        alpha,
        alpha_next: a,
        eps,
        u,
        eta,
        per_obs_loglik: per_obs,
        loglik,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mv::CorrMatrix;
    use crate::specfun;
    use crate::state::ArSpec;

    const LN_2PI: f64 = 1.8378770664093454835606594728112;

    #[test]
    fn single_observation_gaussian() {
        let theta = Theta::ar(0.0, 0.0, 1.0).unwrap().with_offset(0.0);
        let out = filter(Family::GaussVol, &[0.0], &theta).unwrap();
        assert_eq!(out.alpha[0], 0.0);
        assert!((out.loglik - (-0.5 * LN_2PI)).abs() < 1e-14);
        assert_eq!(out.per_obs_loglik.len(), 1);
    }

    #[test]
    fn degenerate_dynamics_give_iid_loglik() {
        // phi = psi = 0: alpha_t = mu for all t
        let theta = Theta::ar(0.4, 0.0, 0.0).unwrap();
        let data = [0.5, -1.2, 0.3, 2.0, -0.7];
        let out = filter(Family::GaussVol, &data, &theta).unwrap();
        let direct: f64 = data
            .iter()
            .map(|&y| -0.5 * LN_2PI - 0.5 * y * y * (-0.4f64).exp() - 0.2)
            .sum();
        assert!((out.loglik - direct).abs() < 1e-12);
        assert!(out.alpha.iter().all(|&a| a == 0.4));
        // permutation invariance in the degenerate case
        let data_perm = [2.0, 0.3, -0.7, 0.5, -1.2];
        let out_perm = filter(Family::GaussVol, &data_perm, &theta).unwrap();
        assert!((out.loglik - out_perm.loglik).abs() < 1e-10);
    }

    #[test]
    fn order_matters_with_dynamics() {
        let theta = Theta::ar(0.1, 0.6, 0.4).unwrap();
        let data = [0.5, -1.2, 0.3, 2.0, -0.7];
        let perm = [2.0, 0.3, -0.7, 0.5, -1.2];
        let a = filter(Family::GaussVol, &data, &theta).unwrap().loglik;
        let b = filter(Family::GaussVol, &perm, &theta).unwrap().loglik;
        assert!((a - b).abs() > 1e-6);
    }

    #[test]
    fn matches_naive_reimplementation() {
        // straight-line oracle written directly from the model definition
        fn naive_gauss(data: &[f64], mu: f64, phi: f64, psi: f64, offset: f64) -> f64 {
            let mut alpha = mu / (1.0 - phi);
            let mut ll = 0.0;
            for &y in data {
                ll += -0.5 * LN_2PI - 0.5 * y * y * (-alpha).exp() - 0.5 * alpha;
                let eps2 = y * y * (-alpha).exp();
                let u = specfun::erf(((eps2 + offset) / 2.0).sqrt());
                let eta = specfun::std_normal_quantile(u);
                alpha = mu + phi * alpha + psi * eta;
            }
            ll
        }
        let mut stream = Stream::new(99);
        for trial in 0..20 {
            let mu = 0.4 * stream.normal();
            let phi = 0.9 * (2.0 * stream.uniform() - 1.0);
            let psi = 0.5 * stream.uniform() + 0.05;
            let data: Vec<f64> = (0..50).map(|_| stream.normal() * 1.5).collect();
            let theta = Theta::ar(mu, phi, psi).unwrap();
            let out = filter(Family::GaussVol, &data, &theta).unwrap();
            let oracle = naive_gauss(&data, mu, phi, psi, theta.offset);
            assert!(
                (out.loglik - oracle).abs() < 1e-10,
                "trial {trial}: {} vs {oracle}",
                out.loglik
            );
        }
    }

    #[test]
    fn alpha_path_reproducible_from_innovations() {
        let theta = Theta::ar(0.3, 0.2, 0.7).unwrap();
        let data = [0.5, -1.2, 0.3, 2.0, -0.7, 0.1];
        let out = filter(Family::GaussVol, &data, &theta).unwrap();
        let ar = theta.state.as_ar().unwrap();
        for t in 0..data.len() - 1 {
            let next = state::step_ar1(ar, out.alpha[t], out.eta[t]);
            assert!((next - out.alpha[t + 1]).abs() < 1e-12);
        }
        let last = state::step_ar1(ar, out.alpha[5], out.eta[5]);
        assert!((last - out.alpha_next).abs() < 1e-12);
        let total: f64 = out.per_obs_loglik.iter().sum();
        assert!((total - out.loglik).abs() < 1e-12);
    }

    #[test]
    fn arma10_equals_ar1_path_for_path() {
        let ar = Theta::ar(0.3, 0.2, 0.7).unwrap();
        let arma = Theta {
            state: StateSpec::Arma(crate::state::ArmaSpec::new(0.3, vec![0.2], vec![0.7]).unwrap()),
            shape: None,
            offset: ar.offset,
        };
        let data = [0.5, -1.2, 0.3, 2.0, -0.7, 0.1, 0.9];
        let a = filter(Family::GaussVol, &data, &ar).unwrap();
        let b = filter(Family::GaussVol, &data, &arma).unwrap();
        for t in 0..data.len() {
            assert_eq!(a.alpha[t], b.alpha[t], "alpha diverges at t={t}");
            assert_eq!(a.eta[t], b.eta[t]);
        }
        assert_eq!(a.loglik, b.loglik);
        assert_eq!(a.alpha_next, b.alpha_next);
    }

    #[test]
    fn invalid_observation_reports_index() {
        let theta = Theta::ar(0.0, 0.2, 0.3).unwrap();
        let err = filter(Family::ExpDur, &[1.0, 2.0, 0.0, 1.0], &theta).unwrap_err();
        match err {
            Error::InvalidObservation { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn stationary_average_init_runs_and_is_deterministic() {
        let arma = Theta {
            state: StateSpec::Arma(
                crate::state::ArmaSpec::new(0.1, vec![0.5, 0.2], vec![0.4, 0.1]).unwrap(),
            ),
            shape: None,
            offset: 1e-4,
        };
        let data: Vec<f64> = {
            let mut s = Stream::new(5);
            (0..40).map(|_| s.normal()).collect()
        };
        let init = FilterInit::StationaryAverage {
            draws: 16,
            seed: 11,
        };
        let a = filter_with_init(Family::GaussVol, &data, &arma, init.clone()).unwrap();
        let b = filter_with_init(Family::GaussVol, &data, &arma, init).unwrap();
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
        let det = filter(Family::GaussVol, &data, &arma).unwrap();
        // averaged likelihood is finite and in the neighbourhood of the
        // deterministic one
        assert!(a.loglik.is_finite());
        assert!((a.loglik - det.loglik).abs() < 5.0);
    }

    #[test]
    fn mv_identity_decomposes_into_univariate_filters() {
        let s1 = ArSpec::new(0.3, 0.2, 0.7).unwrap();
        let s2 = ArSpec::new(0.1, 0.5, 0.3).unwrap();
        let theta = MvTheta::new(vec![s1, s2], CorrMatrix::identity(2)).unwrap();
        let data: Vec<Vec<f64>> = {
            let mut s = Stream::new(3);
            (0..30)
                .map(|_| vec![s.normal(), 1.5 * s.normal()])
                .collect()
        };
        let joint = filter_mv(&data, &theta).unwrap();
        let col = |k: usize| data.iter().map(|r| r[k]).collect::<Vec<f64>>();
        let u1 = Theta::ar(0.3, 0.2, 0.7).unwrap();
        let u2 = Theta::ar(0.1, 0.5, 0.3).unwrap();
        let f1 = filter(Family::GaussVol, &col(0), &u1).unwrap();
        let f2 = filter(Family::GaussVol, &col(1), &u2).unwrap();
        assert!((joint.loglik - (f1.loglik + f2.loglik)).abs() < 1e-10);
        for t in 0..data.len() {
            assert!((joint.alpha[t][0] - f1.alpha[t]).abs() < 1e-12);
            assert!((joint.alpha[t][1] - f2.alpha[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn mv_hand_unrolled_three_steps() {
        let s1 = ArSpec::new(0.1, 0.4, 0.3).unwrap();
        let s2 = ArSpec::new(-0.2, 0.6, 0.2).unwrap();
        let rho = 0.5;
        let corr = CorrMatrix::new(2, vec![1.0, rho, rho, 1.0]).unwrap();
        let theta = MvTheta::new(vec![s1, s2], corr).unwrap();
        let data = vec![vec![0.5, -0.3], vec![1.1, 0.2], vec![-0.4, 0.9]];
        let out = filter_mv(&data, &theta).unwrap();

        // unrolled by hand from the model equations
        let mut a = [0.1 / 0.6, -0.2 / 0.4];
        let mut ll = 0.0;
        for row in &data {
            ll += mv_cond_logpdf(row, &a, &theta).unwrap();
            let (_, eta) = mv_innovation(row, &a, &theta).unwrap();
            a = [
                0.1 + 0.4 * a[0] + 0.3 * eta[0],
                -0.2 + 0.6 * a[1] + 0.2 * eta[1],
            ];
        }
        assert!((out.loglik - ll).abs() < 1e-12);
        assert!((out.alpha_next[0] - a[0]).abs() < 1e-12);
        assert!((out.alpha_next[1] - a[1]).abs() < 1e-12);
    }
}
