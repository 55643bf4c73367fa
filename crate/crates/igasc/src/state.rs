//! State-process dynamics for the time-varying parameter.
//!
//! The state α_t follows a Gaussian AR(1), α_{t+1} = μ + φ α_t + ψ η_t, or
//! more generally an ARMA(p,q) in the innovations η_t. Stationarity gives a
//! normal marginal N(μ_α, σ_α²) and closed-form h-step forecasts.

use crate::error::{Error, Result};
use crate::linalg;

/// AR(1) state specification: α_{t+1} = μ + φ α_t + ψ η_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArSpec {
    pub mu: f64,
    pub phi: f64,
    pub psi: f64,
}

impl ArSpec {
    /// Validated constructor: |φ| < 1 and ψ ≥ 0 (ψ = 0 degenerates to a
    /// constant state, which simulation and filtering both allow).
    pub fn new(mu: f64, phi: f64, psi: f64) -> Result<Self> {
        if !mu.is_finite() || !phi.is_finite() || !psi.is_finite() {
            return Err(Error::domain("AR parameters must be finite"));
        }
        if phi.abs() >= 1.0 {
            return Err(Error::non_stationary(format!("|phi| = {} >= 1", phi.abs())));
        }
        if psi < 0.0 {
            return Err(Error::domain("psi must be nonnegative"));
        }
        Ok(ArSpec { mu, phi, psi })
    }
}

/// ARMA(p,q) state specification:
/// α_{t+1} = μ + Σᵢ φᵢ α_{t+1-i} + Σ_{j=1..q} ψⱼ η_{t-j} + ψ₀ η_t.
///
/// `psi[0]` multiplies the current innovation; `psi[j]` lag j.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSpec {
    pub mu: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Margin kept between the companion spectral radius and one.
const STATIONARITY_MARGIN: f64 = 1e-10;

impl ArmaSpec {
    pub fn new(mu: f64, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::usage("psi must contain at least psi_0"));
        }
        if !mu.is_finite()
            || phi.iter().any(|v| !v.is_finite())
            || psi.iter().any(|v| !v.is_finite())
        {
            return Err(Error::domain("ARMA parameters must be finite"));
        }
        let spec = ArmaSpec { mu, phi, psi };
        let rho = spec.companion_spectral_radius();
        if rho >= 1.0 - STATIONARITY_MARGIN {
            return Err(Error::non_stationary(format!(
                "companion spectral radius {rho} >= 1"
            )));
        }
        Ok(spec)
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn q(&self) -> usize {
        self.psi.len() - 1
    }

    /// Spectral radius of the AR companion matrix; < 1 iff all roots of the
    /// lag polynomial φ(z) lie outside the unit circle.
    pub fn companion_spectral_radius(&self) -> f64 {
        let p = self.phi.len();
        if p == 0 {
            return 0.0;
        }
        let mut m = vec![0.0; p * p];
        for (j, &phi) in self.phi.iter().enumerate() {
            m[j] = phi;
        }
        for i in 1..p {
            m[i * p + (i - 1)] = 1.0;
        }
        linalg::spectral_radius(p, &m)
    }

    /// MA(∞) weights π_m of η_{t-m} in (α_{t+1} - μ_α), truncated once the
    /// incremental squared weight drops below 1e-14.
    pub fn psi_weights(&self) -> Vec<f64> {
        let p = self.p();
        let q = self.q();
        let mut w: Vec<f64> = Vec::with_capacity(256);
        let max_terms = 100_000;
        for m in 0..max_terms {
            let mut v = if m <= q { self.psi[m] } else { 0.0 };
            for i in 1..=p.min(m) {
                v += self.phi[i - 1] * w[m - i];
            }
            w.push(v);
            if m > p + q && v * v < 1e-14 {
                break;
            }
        }
        w
    }

    /// Autocovariance of the state at lag k, from the MA(∞) expansion.
    pub fn autocovariance(&self, lag: usize) -> f64 {
        let w = self.psi_weights();
        let mut s = 0.0;
        for m in 0..w.len().saturating_sub(lag) {
            s += w[m] * w[m + lag];
        }
        s
    }
}

/// Either state specification, as stored in model parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Ar(ArSpec),
    Arma(ArmaSpec),
}

impl StateSpec {
    pub fn ar(mu: f64, phi: f64, psi: f64) -> Result<Self> {
        Ok(StateSpec::Ar(ArSpec::new(mu, phi, psi)?))
    }

    /// The AR(1) view, if this is an AR(1) spec.
    pub fn as_ar(&self) -> Option<&ArSpec> {
        match self {
            StateSpec::Ar(s) => Some(s),
            StateSpec::Arma(_) => None,
        }
    }
}

/// Stationary marginal moments of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryMoments {
    pub mu_alpha: f64,
    pub sigma2_alpha: f64,
}

/// Gaussian law of α_{t+h} given data through time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateForecast {
    pub mean: f64,
    pub variance: f64,
    pub horizon: usize,
}

/// One AR(1) step: μ + φ α + ψ η.
#[inline]
pub fn step_ar1(spec: &ArSpec, alpha: f64, eta: f64) -> f64 {
    spec.mu + spec.phi * alpha + spec.psi * eta
}

/// One ARMA(p,q) step. Histories are ordered newest first: `alpha_hist[0]`
/// is α_t, `eta_hist[0]` is η_t.
pub fn step_arma(spec: &ArmaSpec, alpha_hist: &[f64], eta_hist: &[f64]) -> Result<f64> {
    if alpha_hist.len() != spec.p() {
        return Err(Error::usage(format!(
            "alpha history length {} != p = {}",
            alpha_hist.len(),
            spec.p()
        )));
    }
    if eta_hist.len() != spec.q() + 1 {
        return Err(Error::usage(format!(
            "eta history length {} != q + 1 = {}",
            eta_hist.len(),
            spec.q() + 1
        )));
    }
    let mut a = spec.mu;
    for (phi, alpha) in spec.phi.iter().zip(alpha_hist) {
        a += phi * alpha;
    }
    for (psi, eta) in spec.psi.iter().zip(eta_hist) {
        a += psi * eta;
    }
    Ok(a)
}

/// Stationary marginal N(μ_α, σ_α²) of the state process.
pub fn stationary_moments(spec: &StateSpec) -> Result<StationaryMoments> {
    match spec {
        StateSpec::Ar(s) => {
            if s.phi.abs() >= 1.0 {
                return Err(Error::non_stationary("|phi| >= 1"));
            }
            Ok(StationaryMoments {
                mu_alpha: s.mu / (1.0 - s.phi),
                sigma2_alpha: s.psi * s.psi / (1.0 - s.phi * s.phi),
            })
        }
        StateSpec::Arma(s) => {
            let rho = s.companion_spectral_radius();
            if rho >= 1.0 - STATIONARITY_MARGIN {
                return Err(Error::non_stationary(format!("spectral radius {rho}")));
            }
            let phi_sum: f64 = s.phi.iter().sum();
            Ok(StationaryMoments {
                mu_alpha: s.mu / (1.0 - phi_sum),
                sigma2_alpha: s.autocovariance(0),
            })
        }
    }
}

/// h-step state forecast anchored at the last computable state α_{t+1}
/// (which is deterministic given data through t):
/// mean = φ^{h-1} α_{t+1} + (1 - φ^{h-1}) μ_α,
/// variance = (1 - φ^{2(h-1)}) σ_α².
pub fn forecast_state(spec: &ArSpec, alpha_next: f64, h: usize) -> Result<StateForecast> {
    if h < 1 {
        return Err(Error::usage("forecast horizon must be >= 1"));
    }
    let m = stationary_moments(&StateSpec::Ar(*spec))?;
    let w = spec.phi.powi(h as i32 - 1);
    Ok(StateForecast {
        mean: w * alpha_next + (1.0 - w) * m.mu_alpha,
        variance: (1.0 - w * w) * m.sigma2_alpha,
        horizon: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, phi: f64, psi: f64) -> ArSpec {
        ArSpec::new(mu, phi, psi).unwrap()
    }

    #[test]
    fn ar1_step_fixed_point_and_arithmetic() {
        let s = spec(0.3, 0.2, 0.7);
        assert!((step_ar1(&s, 0.375, 0.0) - 0.375).abs() < 1e-15);
        let pure = spec(0.0, 0.0, 1.0);
        assert_eq!(step_ar1(&pure, 123.0, -0.4), -0.4);
        assert!((step_ar1(&s, 1.0, 1.0) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn ar_spec_rejects_nonstationary() {
        assert!(ArSpec::new(0.0, 1.0, 0.5).is_err());
        assert!(ArSpec::new(0.0, -1.2, 0.5).is_err());
        assert!(ArSpec::new(0.0, 0.5, -0.1).is_err());
        assert!(ArSpec::new(f64::NAN, 0.5, 0.1).is_err());
    }

    #[test]
    fn arma_reduces_to_ar1() {
        let ar = spec(0.3, 0.2, 0.7);
        let arma = ArmaSpec::new(0.3, vec![0.2], vec![0.7]).unwrap();
        for &(a, e) in &[(0.0, 0.5), (1.0, -1.3), (-0.4, 0.1)] {
            let lhs = step_arma(&arma, &[a], &[e]).unwrap();
            assert_eq!(lhs, step_ar1(&ar, a, e));
        }
    }

    #[test]
    fn arma_step_examples() {
        let s = ArmaSpec::new(0.0, vec![0.5, 0.3], vec![1.0, 0.2]).unwrap();
        let v = step_arma(&s, &[1.0, 1.0], &[0.5, -0.4]).unwrap();
        assert!((v - 1.22).abs() < 1e-15);
        // fixed point: eta history zero, alpha at stationary mean
        let m = stationary_moments(&StateSpec::Arma(s.clone())).unwrap();
        let v = step_arma(&s, &[m.mu_alpha, m.mu_alpha], &[0.0, 0.0]).unwrap();
        assert!((v - m.mu_alpha).abs() < 1e-12);
        // length mismatch is a usage error
        assert!(step_arma(&s, &[1.0], &[0.0, 0.0]).is_err());
        assert!(step_arma(&s, &[1.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn arma_rejects_unit_root() {
        assert!(ArmaSpec::new(0.0, vec![0.7, 0.3], vec![1.0]).is_err());
        assert!(ArmaSpec::new(0.0, vec![1.0], vec![1.0]).is_err());
        assert!(ArmaSpec::new(0.0, vec![0.5, 0.4], vec![1.0]).is_ok());
    }

    #[test]
    fn stationary_moments_ar1() {
        let m = stationary_moments(&StateSpec::Ar(spec(0.3, 0.2, 0.7))).unwrap();
        assert!((m.mu_alpha - 0.375).abs() < 1e-15);
        assert!((m.sigma2_alpha - 0.49 / 0.96).abs() < 1e-15);
        let white = stationary_moments(&StateSpec::Ar(spec(0.0, 0.0, 1.0))).unwrap();
        assert_eq!(white.mu_alpha, 0.0);
        assert_eq!(white.sigma2_alpha, 1.0);
    }

    #[test]
    fn arma_moments_match_ar1_closed_form() {
        // ARMA(1,0) variance must equal psi^2 / (1 - phi^2)
        let arma = ArmaSpec::new(0.3, vec![0.2], vec![0.7]).unwrap();
        let m = stationary_moments(&StateSpec::Arma(arma)).unwrap();
        assert!((m.mu_alpha - 0.375).abs() < 1e-12);
        assert!((m.sigma2_alpha - 0.49 / 0.96).abs() < 1e-10);
    }

    #[test]
    fn forecast_state_examples() {
        let s = spec(0.3, 0.2, 0.7);
        let f1 = forecast_state(&s, 1.0, 1).unwrap();
        assert_eq!(f1.mean, 1.0);
        assert_eq!(f1.variance, 0.0);
        let f2 = forecast_state(&s, 1.0, 2).unwrap();
        assert!((f2.mean - 0.5).abs() < 1e-15);
        assert!((f2.variance - 0.96 * (0.49 / 0.96)).abs() < 1e-15);
        let m = stationary_moments(&StateSpec::Ar(s)).unwrap();
        let finf = forecast_state(&s, 1.0, 500).unwrap();
        assert!((finf.mean - m.mu_alpha).abs() < 1e-12);
        assert!((finf.variance - m.sigma2_alpha).abs() < 1e-12);
        assert!(forecast_state(&s, 1.0, 0).is_err());
    }

    #[test]
    fn psi_weights_geometric_for_ar1() {
        let arma = ArmaSpec::new(0.0, vec![0.5], vec![1.0]).unwrap();
        let w = arma.psi_weights();
        for (m, &wm) in w.iter().enumerate().take(10) {
            assert!((wm - 0.5f64.powi(m as i32)).abs() < 1e-12);
        }
        // autocovariance at lag 1 = phi * gamma(0)
        let g0 = arma.autocovariance(0);
        let g1 = arma.autocovariance(1);
        assert!((g1 - 0.5 * g0).abs() < 1e-10);
    }
}
