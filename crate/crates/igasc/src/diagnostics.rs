//! Residual diagnostics and analytic marginal checks.
//!
//! The main tool is the probability integral transform: under a correct
//! model the conditional-CDF residuals u_t = F(y_t | y_{1:t-1}; θ) are iid
//! uniform, which a Kolmogorov-Smirnov test checks. For the Gaussian
//! volatility model the marginal moments of the returns are available in
//! closed form and are exposed here for comparison with sample statistics:
//! kurtosis 3e^{σ_α²} and the autocorrelation of ln y_t²,
//! ρ(τ) = φ^τ σ_α² / (σ_α² + 4.93).

use crate::error::{Error, Result};
use crate::filter::filter;
use crate::obs::{Family, ObsModel, Theta};
use crate::specfun;
use crate::state::{stationary_moments, StateSpec};

/// Variance of ln χ²₁ as used in the closed-form ACF (two decimals, the
/// convention in the volatility literature).
pub const LOG_CHI2_VARIANCE: f64 = 4.93;

/// The exact value, π²/2.
pub const LOG_CHI2_VARIANCE_EXACT: f64 = std::f64::consts::PI * std::f64::consts::PI / 2.0;

/// Kolmogorov-Smirnov uniformity test result.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic_d: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Asymptotic Kolmogorov survival function
/// Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} e^{-2j²λ²}, truncated at 100 terms.
pub fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of uniformity on [0,1]: D is the sup-norm distance
/// between the empirical CDF and the identity, the p-value comes from the
/// asymptotic Kolmogorov distribution at λ = √n · D.
pub fn ks_uniform_test(u: &[f64]) -> Result<KsResult> {
    if u.len() < 2 {
        return Err(Error::usage("KS test needs at least 2 observations"));
    }
    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::domain("KS input must lie in [0,1]"));
    }
    let mut s = u.to_vec();
    s.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &v) in s.iter().enumerate() {
        let upper = (i as f64 + 1.0) / nf - v;
        let lower = v - i as f64 / nf;
        d = d.max(upper).max(lower);
    }
    Ok(KsResult {
        statistic_d: d,
        p_value: kolmogorov_pvalue(nf.sqrt() * d),
        n,
    })
}

/// Ljung-Box portmanteau test for autocorrelation up to `lags`.
/// Returns (Q, p) with Q ~ χ²(lags) under independence.
pub fn ljung_box(x: &[f64], lags: usize) -> Result<(f64, f64)> {
    let n = x.len();
    if lags == 0 || n <= lags + 1 {
        return Err(Error::usage("series too short for the requested lag"));
    }
    let acf = sample_acf(x, lags)?;
    let nf = n as f64;
    let mut q = 0.0;
    for (k, &r) in acf.iter().enumerate().skip(1) {
        q += r * r / (nf - k as f64);
    }
    q *= nf * (nf + 2.0);
    let p = specfun::reg_inc_gamma_upper(0.5 * lags as f64, 0.5 * q);
    Ok((q, p))
}

/// Jarque-Bera normality test: returns (JB, p) with JB ~ χ²₂.
pub fn jarque_bera(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 4 {
        return Err(Error::usage("series too short for Jarque-Bera"));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    // chi-square(2) survival is exp(-x/2)
    Ok((jb, (-0.5 * jb).exp()))
}

/// Sample autocorrelation function at lags 0..=max_lag.
pub fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::usage("series shorter than requested lag"));
    }
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom == 0.0 {
        return Err(Error::domain("zero-variance series"));
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut num = 0.0;
        for t in k..n {
            num += (x[t] - mean) * (x[t - k] - mean);
        }
        acf.push(num / denom);
    }
    Ok(acf)
}

fn gauss_vol_only(family: Family) -> Result<()> {
    if family != Family::GaussVol {
        return Err(Error::usage(
            "closed-form marginal properties hold for the Gaussian volatility family",
        ));
    }
    Ok(())
}

/// Closed-form ACF of ln y_t² at lags 1..=max_lag for the Gaussian
/// volatility model, using the conventional 4.93 for the ln χ²₁ variance.
pub fn theoretical_acf_logy2(family: Family, theta: &Theta, max_lag: usize) -> Result<Vec<f64>> {
    theoretical_acf_logy2_with(family, theta, max_lag, LOG_CHI2_VARIANCE)
}

/// As [`theoretical_acf_logy2`] with an explicit ln χ²₁ variance constant
/// (pass [`LOG_CHI2_VARIANCE_EXACT`] for π²/2).
pub fn theoretical_acf_logy2_with(
    family: Family,
    theta: &Theta,
    max_lag: usize,
    log_chi2_variance: f64,
) -> Result<Vec<f64>> {
    gauss_vol_only(family)?;
    let ar = theta
        .state
        .as_ar()
        .ok_or_else(|| Error::usage("closed-form ACF needs an AR(1) state"))?;
    let m = stationary_moments(&StateSpec::Ar(*ar))?;
    let scale = m.sigma2_alpha / (m.sigma2_alpha + log_chi2_variance);
    Ok((1..=max_lag)
        .map(|tau| ar.phi.powi(tau as i32) * scale)
        .collect())
}

/// Closed-form kurtosis 3e^{σ_α²} of the Gaussian volatility returns.
pub fn theoretical_kurtosis(family: Family, theta: &Theta) -> Result<f64> {
    gauss_vol_only(family)?;
    let m = stationary_moments(&theta.state)?;
    Ok(3.0 * m.sigma2_alpha.exp())
}

/// Exact ACF of ln y_t² under the score-driven recursion.
///
/// [`theoretical_acf_logy2`] is the formula carried over from the
/// parameter-driven stochastic-volatility analogy, where ln ε_t² is
/// independent of the state at every lead and lag. Here the state is driven
/// by the data: η_t is a monotone function of ε_t², so ln ε_t² feeds
/// α_{t+1} and the autocovariance picks up an extra term,
///
///   ρ(τ) = (φ^τ σ_α² + ψ φ^{τ-1} c) / (σ_α² + π²/2),
///   c = Cov(ln ε², Φ⁻¹(F_{χ²₁}(ε² + offset))) ≈ 2.104 at zero offset.
///
/// With ψ of ordinary magnitude the extra term dominates at short lags.
pub fn model_acf_logy2(family: Family, theta: &Theta, max_lag: usize) -> Result<Vec<f64>> {
    gauss_vol_only(family)?;
    let ar = theta
        .state
        .as_ar()
        .ok_or_else(|| Error::usage("closed-form ACF needs an AR(1) state"))?;
    let m = stationary_moments(&StateSpec::Ar(*ar))?;
    let c = log_eps2_eta_covariance(theta.offset);
    let denom = m.sigma2_alpha + LOG_CHI2_VARIANCE_EXACT;
    Ok((1..=max_lag)
        .map(|tau| {
            let t = tau as i32;
            (ar.phi.powi(t) * m.sigma2_alpha + ar.psi * ar.phi.powi(t - 1) * c) / denom
        })
        .collect())
}

/// Cov(ln ε², η) for ε standard normal, by quadrature (even integrand;
/// E[η] = 0 so the raw cross moment is the covariance).
fn log_eps2_eta_covariance(offset: f64) -> f64 {
    let n = 400_000;
    let lo = 1e-10f64;
    let hi = 10.0f64;
    let h = (hi - lo) / n as f64;
    let f = |z: f64| {
        (z * z).ln()
            * specfun::std_normal_quantile(specfun::chi1_cdf(z * z + offset))
            * specfun::std_normal_pdf(z)
    };
    let mut s = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        s += f(lo + i as f64 * h);
    }
    2.0 * s * h
}

/// Conditional-CDF residuals u_t = F(y_t | y_{1:t-1}; θ): run the filter and
/// apply the PIT at each step. These are the residuals the KS test is
/// applied to; for volatility families they differ from the score-copula
/// uniforms used as innovations.
pub fn pit_series(family: Family, data: &[f64], theta: &Theta) -> Result<Vec<f64>> {
    let out = filter(family, data, theta)?;
    let obs = ObsModel::new(family, theta)?;
    Ok(data
        .iter()
        .zip(&out.alpha)
        .map(|(&y, &a)| obs.pit(y, a))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn ks_best_and_worst_cases() {
        // equally spaced midpoints: D = 1/(2T)
        let t = 100;
        let u: Vec<f64> = (0..t)
            .map(|i| (2.0 * i as f64 + 1.0) / (2.0 * t as f64))
            .collect();
        let r = ks_uniform_test(&u).unwrap();
        assert!((r.statistic_d - 1.0 / (2.0 * t as f64)).abs() < 1e-12);
        assert!(r.p_value > 0.999);
        // all mass at 0.5: D = 0.5
        let r = ks_uniform_test(&vec![0.5; 200]).unwrap();
        assert!((r.statistic_d - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
        assert!(ks_uniform_test(&[0.5]).is_err());
        assert!(ks_uniform_test(&[0.5, 1.5]).is_err());
    }

    #[test]
    fn ks_pvalue_matches_published_point() {
        // n = 2476, D = 0.026795 is reported as p ≈ 0.0571
        let lambda = (2476.0f64).sqrt() * 0.026795;
        let p = kolmogorov_pvalue(lambda);
        assert!((p - 0.0571).abs() < 5e-4, "p = {p}");
        // monotone decreasing in D
        assert!(kolmogorov_pvalue(1.0) > kolmogorov_pvalue(1.5));
        assert_eq!(kolmogorov_pvalue(0.0), 1.0);
    }

    #[test]
    fn ks_calibration_on_uniform_draws() {
        let mut rejections = 0;
        for seed in 0..100 {
            let mut s = Stream::new(900 + seed);
            let u: Vec<f64> = (0..10_000).map(|_| s.uniform()).collect();
            if ks_uniform_test(&u).unwrap().p_value <= 0.01 {
                rejections += 1;
            }
        }
        assert!(rejections <= 2, "{rejections} false rejections at 1%");
    }

    #[test]
    fn ks_rejects_beta22() {
        // Beta(2,2) samples via inverse CDF on a fine grid approximation
        let mut rejections = 0;
        for seed in 0..100 {
            let mut s = Stream::new(1700 + seed);
            let u: Vec<f64> = (0..10_000)
                .map(|_| {
                    // draw from Beta(2,2) by inversion of I_x(2,2) = 3x^2-2x^3
                    let target = s.uniform();
                    let mut lo = 0.0;
                    let mut hi = 1.0;
                    for _ in 0..40 {
                        let mid = 0.5 * (lo + hi);
                        if 3.0 * mid * mid - 2.0 * mid * mid * mid < target {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                })
                .collect();
            if ks_uniform_test(&u).unwrap().p_value < 0.01 {
                rejections += 1;
            }
        }
        assert!(
            rejections >= 99,
            "only {rejections} rejections of Beta(2,2)"
        );
    }

    #[test]
    fn log_chi2_constant_is_close_to_exact() {
        assert!((LOG_CHI2_VARIANCE - LOG_CHI2_VARIANCE_EXACT).abs() < 0.01);
        // empirical check: variance of ln Z^2
        let mut s = Stream::new(8);
        let n = 400_000;
        let x: Vec<f64> = (0..n).map(|_| (s.normal().powi(2)).ln()).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!((var - LOG_CHI2_VARIANCE_EXACT).abs() < 0.06, "var {var}");
    }

    #[test]
    fn theoretical_acf_values() {
        let theta = Theta::ar(0.3, 0.2, 0.7).unwrap();
        let acf = theoretical_acf_logy2(Family::GaussVol, &theta, 3).unwrap();
        // sigma_alpha^2 = 0.5104166..., rho(1) = 0.2 * s / (s + 4.93)
        let s = 0.49 / 0.96;
        assert!((acf[0] - 0.2 * s / (s + 4.93)).abs() < 1e-14);
        assert!((acf[0] - 0.018764).abs() < 1e-5);
        assert!((acf[1] - 0.04 * s / (s + 4.93)).abs() < 1e-14);
        // phi = 0: all lags zero
        let flat = Theta::ar(0.1, 0.0, 0.5).unwrap();
        let acf = theoretical_acf_logy2(Family::GaussVol, &flat, 5).unwrap();
        assert!(acf.iter().all(|&v| v == 0.0));
        assert!(theoretical_acf_logy2(Family::TVol, &theta, 3).is_err());
    }

    #[test]
    fn theoretical_kurtosis_values() {
        // psi = 0 is conditionally Gaussian with constant variance: kurtosis 3
        let flat = Theta::ar(0.1, 0.3, 0.0).unwrap();
        assert!((theoretical_kurtosis(Family::GaussVol, &flat).unwrap() - 3.0).abs() < 1e-14);
        let theta = Theta::ar(0.3, 0.2, 0.7).unwrap();
        let k = theoretical_kurtosis(Family::GaussVol, &theta).unwrap();
        assert!((k - 3.0 * (0.49f64 / 0.96).exp()).abs() < 1e-12);
        assert!((k - 4.998).abs() < 1e-3);
        assert!(theoretical_kurtosis(Family::ExpDur, &theta).is_err());
    }

    #[test]
    fn model_acf_matches_simulation_where_formula_does_not() {
        use crate::simulate::{simulate, SimConfig};
        let theta = Theta::ar(0.3, 0.2, 0.7).unwrap().with_offset(0.0);
        let sim = simulate(&SimConfig::new(
            Family::GaussVol,
            theta.clone(),
            1_000_000,
            44,
        ))
        .unwrap();
        let logy2: Vec<f64> = sim.y.iter().map(|y| (y * y).max(1e-300).ln()).collect();
        let acf = crate::diagnostics::sample_acf(&logy2, 3).unwrap();
        let exact = model_acf_logy2(Family::GaussVol, &theta, 3).unwrap();
        let formula = theoretical_acf_logy2(Family::GaussVol, &theta, 3).unwrap();
        for tau in 1..=3 {
            assert!(
                (acf[tau] - exact[tau - 1]).abs() < 0.02,
                "lag {tau}: sample {} vs exact {}",
                acf[tau],
                exact[tau - 1]
            );
        }
        // the data-driven feedback term dominates the short-lag ACF
        assert!(exact[0] - formula[0] > 0.2);
    }

    #[test]
    fn pit_and_innovation_identity_for_gauss_vol() {
        // with zero offset: chi1_cdf(eps^2) = |2 Phi(eps) - 1|
        let theta = Theta::ar(0.3, 0.2, 0.7).unwrap().with_offset(0.0);
        let obs = ObsModel::new(Family::GaussVol, &theta).unwrap();
        for i in -30..=30 {
            let eps = i as f64 * 0.1;
            let (u_innov, _) = obs.innovation(eps, 0.0);
            let u_pit = obs.pit(eps, 0.0);
            let identity = (2.0 * u_pit - 1.0).abs();
            assert!(
                (u_innov - identity).abs() < 1e-12,
                "identity off at eps={eps}: {u_innov} vs {identity}"
            );
        }
    }

    #[test]
    fn ljung_box_behaviour() {
        let mut s = Stream::new(12);
        let iid: Vec<f64> = (0..5_000).map(|_| s.normal()).collect();
        let (_, p) = ljung_box(&iid, 20).unwrap();
        assert!(p > 0.01, "iid series rejected: p = {p}");
        // strongly autocorrelated series is rejected
        let mut ar = vec![0.0f64; 5_000];
        for t in 1..5_000 {
            ar[t] = 0.8 * ar[t - 1] + s.normal();
        }
        let (_, p) = ljung_box(&ar, 20).unwrap();
        assert!(p < 1e-10);
        assert!(ljung_box(&iid[..10], 20).is_err());
    }

    #[test]
    fn jarque_bera_behaviour() {
        let mut s = Stream::new(13);
        let normal: Vec<f64> = (0..20_000).map(|_| s.normal()).collect();
        let (_, p) = jarque_bera(&normal).unwrap();
        assert!(p > 0.01, "normal sample rejected: p = {p}");
        let heavy: Vec<f64> = (0..20_000).map(|_| s.student_t_std(4.0)).collect();
        let (_, p) = jarque_bera(&heavy).unwrap();
        assert!(p < 1e-6, "t(4) sample not rejected: p = {p}");
    }
}
