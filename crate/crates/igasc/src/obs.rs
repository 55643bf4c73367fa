//! Observation families.
//!
//! Each family supplies the conditional log-density, the score with respect
//! to the state, the score-CDF innovation map, and the probability integral
//! transform. Volatility families standardize via ε = y e^{-α/2} (α is the
//! log-variance); duration families via ε = y e^{-α} (α is the log-scale).
//!
//! The innovation map is the core construction: the realized score is pushed
//! through the CDF of the score under the conditional law, giving a uniform
//! u_t, and then through the normal quantile, giving η_t ~ N(0,1) exactly
//! when the model is correct:
//!
//! - Gaussian volatility:  u = F_{χ²₁}(ε²),            η = Φ⁻¹(u)
//! - Student-t volatility: u = F_{F(1,ν)}(ν ε²/(ν-2)),  η = Φ⁻¹(u)
//! - Exponential duration: u = 1 - e^{-ε},              η = Φ⁻¹(u)
//! - Weibull duration:     u = 1 - e^{-(ε/β)^k},        η = Φ⁻¹(u)
//!
//! For volatility families a small offset (default 1e-4, calibrated for
//! percentage returns) is added to ε² inside the innovation map only, so
//! exactly-zero returns keep the recursion finite. The likelihood and the
//! PIT never see the offset.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::specfun;
use crate::state::StateSpec;

const LN_2PI: f64 = 1.8378770664093454835606594728112;

/// Offset added to ε² in the volatility innovation maps (percentage returns).
pub const DEFAULT_OFFSET: f64 = 1e-4;

/// The four univariate observation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    GaussVol,
    TVol,
    ExpDur,
    WeibullDur,
}

impl Family {
    pub fn is_volatility(self) -> bool {
        matches!(self, Family::GaussVol | Family::TVol)
    }

    pub fn is_duration(self) -> bool {
        !self.is_volatility()
    }

    pub fn has_shape(self) -> bool {
        matches!(self, Family::TVol | Family::WeibullDur)
    }

    /// Name of the shape parameter, if the family has one.
    pub fn shape_name(self) -> Option<&'static str> {
        match self {
            Family::TVol => Some("nu"),
            Family::WeibullDur => Some("k"),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::GaussVol => "gauss-vol",
            Family::TVol => "t-vol",
            Family::ExpDur => "exp-dur",
            Family::WeibullDur => "weibull-dur",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-vol" => Ok(Family::GaussVol),
            "t-vol" => Ok(Family::TVol),
            "exp-dur" => Ok(Family::ExpDur),
            "weibull-dur" => Ok(Family::WeibullDur),
            other => Err(Error::usage(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Model parameters: state dynamics, optional family shape (ν for the
/// t-volatility model, k for the Weibull duration model), and the
/// innovation-map offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub state: StateSpec,
    pub shape: Option<f64>,
    pub offset: f64,
}

impl Theta {
    /// AR(1) parameters with no shape and the default offset.
    pub fn ar(mu: f64, phi: f64, psi: f64) -> Result<Theta> {
        Ok(Theta {
            state: StateSpec::ar(mu, phi, psi)?,
            shape: None,
            offset: DEFAULT_OFFSET,
        })
    }

    pub fn with_shape(mut self, shape: f64) -> Theta {
        self.shape = Some(shape);
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Theta {
        self.offset = offset;
        self
    }
}

/// An observation family prepared for repeated evaluation at fixed θ:
/// shape checked once, normalizing constants cached.
#[derive(Debug, Clone, Copy)]
pub struct ObsModel {
    pub family: Family,
    offset: f64,
    /// ν or k; unused for shapeless families.
    shape: f64,
    /// TVol: log density constant ln c.
    ln_c: f64,
    /// Weibull: mean-one scale β = 1/Γ(1+1/k).
    beta: f64,
    /// Weibull: ln k - k ln β.
    ln_norm: f64,
}

impl ObsModel {
    pub fn new(family: Family, theta: &Theta) -> Result<ObsModel> {
        if !(theta.offset >= 0.0) || !theta.offset.is_finite() {
            return Err(Error::domain("offset must be finite and nonnegative"));
        }
        let mut m = ObsModel {
            family,
            offset: theta.offset,
            shape: f64::NAN,
            ln_c: 0.0,
            beta: 1.0,
            ln_norm: 0.0,
        };
        match family {
            Family::GaussVol | Family::ExpDur => {
                if theta.shape.is_some() {
                    return Err(Error::usage(format!(
                        "{family} does not take a shape parameter"
                    )));
                }
            }
            Family::TVol => {
                let nu = theta
                    .shape
                    .ok_or_else(|| Error::usage("t-vol requires shape nu"))?;
                if !(nu > 2.0) || !nu.is_finite() {
                    return Err(Error::domain(format!("nu = {nu} must exceed 2")));
                }
                m.shape = nu;
                m.ln_c = specfun::log_gamma(0.5 * (nu + 1.0))
                    - specfun::log_gamma(0.5 * nu)
                    - 0.5 * ((nu - 2.0) * std::f64::consts::PI).ln();
            }
            Family::WeibullDur => {
                let k = theta
                    .shape
                    .ok_or_else(|| Error::usage("weibull-dur requires shape k"))?;
                if !(k > 0.0) || !k.is_finite() {
                    return Err(Error::domain(format!("k = {k} must be positive")));
                }
                m.shape = k;
                m.beta = (-specfun::log_gamma(1.0 + 1.0 / k)).exp();
                m.ln_norm = k.ln() - k * m.beta.ln();
            }
        }
        Ok(m)
    }

    /// Check one observation for family validity.
    pub fn validate_obs(&self, y: f64) -> std::result::Result<(), String> {
        if !y.is_finite() {
            return Err(format!("observation {y} is not finite"));
        }
        if self.family.is_duration() && y <= 0.0 {
            return Err(format!("duration {y} must be strictly positive"));
        }
        Ok(())
    }

    /// The standardized residual: ε = y e^{-α/2} (volatility) or
    /// ε = y e^{-α} (duration).
    #[inline]
    pub fn standardized(&self, y: f64, alpha: f64) -> f64 {
        if self.family.is_volatility() {
            y * (-0.5 * alpha).exp()
        } else {
            y * (-alpha).exp()
        }
    }

    /// Conditional log-density ln f(y | α; θ).
    pub fn cond_logpdf(&self, y: f64, alpha: f64) -> f64 {
        let eps = self.standardized(y, alpha);
        match self.family {
            Family::GaussVol => -0.5 * LN_2PI - 0.5 * eps * eps - 0.5 * alpha,
            Family::TVol => {
                let nu = self.shape;
                self.ln_c - 0.5 * (nu + 1.0) * (eps * eps / (nu - 2.0)).ln_1p() - 0.5 * alpha
            }
            Family::ExpDur => -alpha - eps,
            Family::WeibullDur => {
                let k = self.shape;
                self.ln_norm + (k - 1.0) * y.ln() - k * alpha - (eps / self.beta).powf(k)
            }
        }
    }

    /// Score ∂ ln f(y | α; θ) / ∂α.
    pub fn score(&self, y: f64, alpha: f64) -> f64 {
        let eps = self.standardized(y, alpha);
        match self.family {
            Family::GaussVol => 0.5 * (eps * eps - 1.0),
            Family::TVol => {
                let nu = self.shape;
                let e2 = eps * eps;
                -0.5 + 0.5 * (nu + 1.0) * e2 / ((nu - 2.0) + e2)
            }
            Family::ExpDur => eps - 1.0,
            Family::WeibullDur => {
                let k = self.shape;
                k * (eps / self.beta).powf(k) - k
            }
        }
    }

    /// The score-CDF uniform u_t and Gaussian innovation η_t = Φ⁻¹(u_t).
    pub fn innovation(&self, y: f64, alpha: f64) -> (f64, f64) {
        let eps = self.standardized(y, alpha);
        let u = match self.family {
            Family::GaussVol => specfun::chi1_cdf(eps * eps + self.offset),
            Family::TVol => {
                let nu = self.shape;
                specfun::f_1nu_cdf(nu / (nu - 2.0) * (eps * eps + self.offset), nu)
            }
            Family::ExpDur => -(-eps).exp_m1(),
            Family::WeibullDur => -(-(eps / self.beta).powf(self.shape)).exp_m1(),
        };
        (u, specfun::std_normal_quantile(u))
    }

    /// Probability integral transform: the conditional CDF of y given α.
    pub fn pit(&self, y: f64, alpha: f64) -> f64 {
        let eps = self.standardized(y, alpha);
        match self.family {
            Family::GaussVol => specfun::std_normal_cdf(eps),
            Family::TVol => {
                let nu = self.shape;
                specfun::student_t_cdf(eps * (nu / (nu - 2.0)).sqrt(), nu)
            }
            Family::ExpDur => -(-eps).exp_m1(),
            Family::WeibullDur => -(-(eps / self.beta).powf(self.shape)).exp_m1(),
        }
    }

    /// Draw one standardized residual ε from the family's law.
    pub fn draw_eps(&self, stream: &mut Stream) -> f64 {
        match self.family {
            Family::GaussVol => stream.normal(),
            Family::TVol => stream.student_t_std(self.shape),
            Family::ExpDur => stream.exponential(),
            Family::WeibullDur => stream.weibull(self.beta, self.shape),
        }
    }

    /// Map a standardized residual back to an observation.
    #[inline]
    pub fn y_from_eps(&self, eps: f64, alpha: f64) -> f64 {
        if self.family.is_volatility() {
            eps * (0.5 * alpha).exp()
        } else {
            eps * alpha.exp()
        }
    }

    /// ν or k (NaN for shapeless families).
    pub(crate) fn shape_raw(&self) -> f64 {
        self.shape
    }

    /// Weibull mean-one scale β (1.0 for other families).
    pub(crate) fn weibull_scale(&self) -> f64 {
        self.beta
    }
}

fn checked<T>(m: &ObsModel, y: f64, alpha: f64, f: impl Fn(&ObsModel) -> T) -> Result<T> {
    m.validate_obs(y).map_err(Error::Domain)?;
    if !alpha.is_finite() {
        return Err(Error::domain(format!("state {alpha} is not finite")));
    }
    Ok(f(m))
}

/// Conditional log-density ln f(y | α; θ) for one observation.
pub fn cond_logpdf(family: Family, y: f64, alpha: f64, theta: &Theta) -> Result<f64> {
    let m = ObsModel::new(family, theta)?;
    checked(&m, y, alpha, |m| m.cond_logpdf(y, alpha))
}

/// Score of the conditional log-density with respect to the state.
pub fn score(family: Family, y: f64, alpha: f64, theta: &Theta) -> Result<f64> {
    let m = ObsModel::new(family, theta)?;
    checked(&m, y, alpha, |m| m.score(y, alpha))
}

/// Innovation pair (u, η) for one observation.
pub fn innovation(family: Family, y: f64, alpha: f64, theta: &Theta) -> Result<(f64, f64)> {
    let m = ObsModel::new(family, theta)?;
    checked(&m, y, alpha, |m| m.innovation(y, alpha))
}

/// Probability integral transform of one observation.
pub fn pit(family: Family, y: f64, alpha: f64, theta: &Theta) -> Result<f64> {
    let m = ObsModel::new(family, theta)?;
    checked(&m, y, alpha, |m| m.pit(y, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta_for(family: Family) -> Theta {
        let t = Theta::ar(0.3, 0.2, 0.7).unwrap().with_offset(0.0);
        match family {
            Family::TVol => t.with_shape(10.0),
            Family::WeibullDur => t.with_shape(2.0),
            _ => t,
        }
    }

    #[test]
    fn gauss_logpdf_at_zero() {
        let th = theta_for(Family::GaussVol);
        let v = cond_logpdf(Family::GaussVol, 0.0, 0.0, &th).unwrap();
        assert!((v - (-0.5 * LN_2PI)).abs() < 1e-12);
        assert!((v + 0.918939).abs() < 1e-6);
    }

    #[test]
    fn exp_logpdf_at_one() {
        let th = theta_for(Family::ExpDur);
        let v = cond_logpdf(Family::ExpDur, 1.0, 0.0, &th).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tvol_approaches_gaussian_for_large_nu() {
        let tt = theta_for(Family::TVol).with_shape(1e6);
        let tg = theta_for(Family::GaussVol);
        for &y in &[-2.0, 0.0, 2.0] {
            let a = cond_logpdf(Family::TVol, y, 0.0, &tt).unwrap();
            let b = cond_logpdf(Family::GaussVol, y, 0.0, &tg).unwrap();
            assert!((a - b).abs() < 1e-3, "y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn score_zeros() {
        let m = ObsModel::new(Family::GaussVol, &theta_for(Family::GaussVol)).unwrap();
        // eps = 1 at alpha = 0, y = 1
        assert!(m.score(1.0, 0.0).abs() < 1e-15);
        let e = ObsModel::new(Family::ExpDur, &theta_for(Family::ExpDur)).unwrap();
        assert!(e.score(1.0, 0.0).abs() < 1e-15);
    }

    #[test]
    fn weibull_k1_equals_exponential() {
        let tw = theta_for(Family::WeibullDur).with_shape(1.0);
        let te = theta_for(Family::ExpDur);
        let w = ObsModel::new(Family::WeibullDur, &tw).unwrap();
        let e = ObsModel::new(Family::ExpDur, &te).unwrap();
        for &(y, a) in &[(0.5, 0.0), (2.0, 0.3), (1.3, -0.7)] {
            assert!((w.cond_logpdf(y, a) - e.cond_logpdf(y, a)).abs() < 1e-12);
            assert!((w.score(y, a) - e.score(y, a)).abs() < 1e-12);
            let (uw, ew) = w.innovation(y, a);
            let (ue, ee) = e.innovation(y, a);
            assert!((uw - ue).abs() < 1e-12);
            assert!((ew - ee).abs() < 1e-12);
        }
        // Weibull k=1 score at eps=2 equals 1
        assert!((w.score(2.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_median_innovation() {
        let th = theta_for(Family::ExpDur);
        let eps = std::f64::consts::LN_2;
        let (u, eta) = innovation(Family::ExpDur, eps, 0.0, &th).unwrap();
        assert!((u - 0.5).abs() < 1e-14);
        assert!(eta.abs() < 1e-13);
    }

    #[test]
    fn gauss_median_innovation() {
        // chi-square(1) median, zero offset
        let th = theta_for(Family::GaussVol);
        let y = 0.454936f64.sqrt();
        let (u, eta) = innovation(Family::GaussVol, y, 0.0, &th).unwrap();
        assert!((u - 0.5).abs() < 1e-5);
        assert!(eta.abs() < 1e-4);
    }

    #[test]
    fn pit_basics() {
        let th = theta_for(Family::GaussVol);
        assert!((pit(Family::GaussVol, 0.0, 1.3, &th).unwrap() - 0.5).abs() < 1e-14);
        let te = theta_for(Family::ExpDur);
        let p = pit(Family::ExpDur, std::f64::consts::LN_2, 0.0, &te).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
    }

    #[test]
    fn duration_rejects_nonpositive() {
        let th = theta_for(Family::ExpDur);
        assert!(cond_logpdf(Family::ExpDur, 0.0, 0.0, &th).is_err());
        assert!(cond_logpdf(Family::ExpDur, -1.0, 0.0, &th).is_err());
        assert!(innovation(Family::ExpDur, f64::NAN, 0.0, &th).is_err());
        assert!(pit(
            Family::GaussVol,
            1.0,
            f64::INFINITY,
            &theta_for(Family::GaussVol)
        )
        .is_err());
    }

    #[test]
    fn shape_validation() {
        let base = Theta::ar(0.0, 0.5, 0.3).unwrap();
        assert!(ObsModel::new(Family::TVol, &base).is_err());
        assert!(ObsModel::new(Family::TVol, &base.clone().with_shape(1.5)).is_err());
        assert!(ObsModel::new(Family::WeibullDur, &base.clone().with_shape(-1.0)).is_err());
        assert!(ObsModel::new(Family::GaussVol, &base.clone().with_shape(3.0)).is_err());
        assert!(ObsModel::new(Family::GaussVol, &base).is_ok());
    }

    #[test]
    fn innovation_monotone_in_magnitude() {
        for family in [Family::GaussVol, Family::TVol] {
            let m = ObsModel::new(family, &theta_for(family)).unwrap();
            let mut last = f64::NEG_INFINITY;
            for i in 1..200 {
                let eps = i as f64 * 0.03;
                let (_, eta) = m.innovation(eps, 0.0);
                assert!(eta > last, "{family}: eta not increasing at eps={eps}");
                last = eta;
            }
        }
        for family in [Family::ExpDur, Family::WeibullDur] {
            let m = ObsModel::new(family, &theta_for(family)).unwrap();
            let mut last = f64::NEG_INFINITY;
            for i in 1..200 {
                let eps = i as f64 * 0.03;
                let (_, eta) = m.innovation(eps, 0.0);
                assert!(eta > last, "{family}: eta not increasing at eps={eps}");
                last = eta;
            }
        }
    }

    #[test]
    fn offset_applies_only_to_volatility_innovation() {
        let th = Theta::ar(0.0, 0.2, 0.5).unwrap().with_offset(1e-4);
        let m = ObsModel::new(Family::GaussVol, &th).unwrap();
        // at y = 0 the offset keeps eta finite
        let (u, eta) = m.innovation(0.0, 0.0);
        assert!(u > 0.0 && eta.is_finite());
        // but the likelihood is offset-free
        let l0 = m.cond_logpdf(0.0, 0.0);
        let m_no = ObsModel::new(Family::GaussVol, &th.clone().with_offset(0.0)).unwrap();
        assert_eq!(l0, m_no.cond_logpdf(0.0, 0.0));
    }
}
