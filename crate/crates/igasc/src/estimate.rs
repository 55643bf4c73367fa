//! Maximum-likelihood estimation.
//!
//! Constraints are enforced by reparameterization, never by rejection:
//! φ = tanh(z), ψ = exp(z), ν = 2.001 + exp(z), k = exp(z), correlations via
//! the hyperspherical angles of the Cholesky factor. The optimizer is
//! Nelder-Mead with one restart from the incumbent, followed by a BFGS
//! polish with numerical gradients. Standard errors come from the inverse of
//! the negative numerical Hessian in the transformed space, mapped to the
//! natural scale by the delta method; the reported 95% intervals are the
//! symmetric estimate ± 1.96·se, even when they cross a constraint boundary.

use crate::error::{Error, Result};
use crate::filter::{filter, filter_mv};
use crate::linalg;
use crate::mv::{corr_param_inverse, corr_param_map, n_angles, CorrMatrix, MvTheta};
use crate::obs::{Family, Theta};
use crate::optim;
use crate::state::{ArSpec, StateSpec};

/// Floor on ν in estimation, keeping the variance of the t innovations
/// defined with a little margin.
pub const NU_FLOOR: f64 = 2.001;

/// Data lengths below this are fit anyway but flagged as unreliable.
pub const SHORT_DATA_FLOOR: usize = 30;

/// Optimizer configuration.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Function-evaluation budget per stage (two Nelder-Mead stages plus the
    /// BFGS polish).
    pub max_evals_per_stage: usize,
    /// Convergence: function change below this...
    pub f_tol: f64,
    /// ...and parameter change below this.
    pub x_tol: f64,
    /// Relative step for the standard-error Hessian.
    pub hessian_step: f64,
    /// Relative size of the initial simplex.
    pub nm_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_evals_per_stage: 20_000,
            f_tol: 1e-10,
            x_tol: 1e-8,
            hessian_step: 1e-4,
            nm_step: 0.1,
        }
    }
}

/// Estimation output shared by every model in the crate.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub param_names: Vec<String>,
    /// Point estimates on the natural scale.
    pub estimates: Vec<f64>,
    /// Delta-method standard errors; None when the Hessian is singular.
    pub std_errors: Option<Vec<f64>>,
    /// Symmetric 95% intervals, estimate ± 1.96·se.
    pub ci95: Option<Vec<(f64, f64)>>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub eval_count: usize,
    /// Set when the series is shorter than [`SHORT_DATA_FLOOR`].
    pub short_data: bool,
}

/// Univariate fit: report plus the fitted parameter object.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub family: Family,
    pub theta: Theta,
    pub report: FitReport,
}

/// Multivariate fit.
#[derive(Debug, Clone)]
pub struct MvFitResult {
    pub theta: MvTheta,
    pub report: FitReport,
}

// ---------------------------------------------------------------------------
// Parameter transforms
// ---------------------------------------------------------------------------

/// Map valid parameters to the unconstrained vector
/// z = (μ, atanh φ, ln ψ [, ln(ν - 2.001) | ln k]).
pub fn transform(family: Family, theta: &Theta) -> Result<Vec<f64>> {
    let ar = theta
        .state
        .as_ar()
        .ok_or_else(|| Error::usage("estimation works on AR(1) state specifications"))?;
    if ar.phi.abs() >= 1.0 {
        return Err(Error::domain("phi on the stationarity boundary"));
    }
    if ar.psi <= 0.0 {
        return Err(Error::domain("psi must be positive for estimation"));
    }
    let mut z = vec![ar.mu, ar.phi.atanh(), ar.psi.ln()];
    match family {
        Family::TVol => {
            let nu = theta.shape.ok_or_else(|| Error::usage("missing nu"))?;
            if nu <= NU_FLOOR {
                return Err(Error::domain(format!("nu must exceed {NU_FLOOR}")));
            }
            z.push((nu - NU_FLOOR).ln());
        }
        Family::WeibullDur => {
            let k = theta.shape.ok_or_else(|| Error::usage("missing k"))?;
            if k <= 0.0 {
                return Err(Error::domain("k must be positive"));
            }
            z.push(k.ln());
        }
        _ => {}
    }
    Ok(z)
}

/// Inverse of [`transform`]; the offset is carried through unchanged.
pub fn untransform(family: Family, z: &[f64], offset: f64) -> Result<Theta> {
    let want = if family.has_shape() { 4 } else { 3 };
    if z.len() != want {
        return Err(Error::usage(format!(
            "{family} expects {want} transformed parameters, got {}",
            z.len()
        )));
    }
    let state = StateSpec::ar(z[0], z[1].tanh(), z[2].exp())?;
    let shape = match family {
        Family::TVol => Some(NU_FLOOR + z[3].exp()),
        Family::WeibullDur => Some(z[3].exp()),
        _ => None,
    };
    Ok(Theta {
        state,
        shape,
        offset,
    })
}

fn param_names(family: Family) -> Vec<String> {
    let mut names = vec!["mu".to_string(), "phi".to_string(), "psi".to_string()];
    if let Some(s) = family.shape_name() {
        names.push(s.to_string());
    }
    names
}

fn natural_params(family: Family, theta: &Theta) -> Vec<f64> {
    let ar = theta.state.as_ar().expect("AR(1) by construction");
    let mut v = vec![ar.mu, ar.phi, ar.psi];
    if family.has_shape() {
        v.push(theta.shape.expect("shape present by construction"));
    }
    v
}

// ---------------------------------------------------------------------------
// Shared maximization pipeline
// ---------------------------------------------------------------------------

pub(crate) struct Maximized {
    pub z: Vec<f64>,
    pub loglik: f64,
    pub estimates: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub ci95: Option<Vec<(f64, f64)>>,
    pub converged: bool,
    pub iterations: usize,
    pub eval_count: usize,
}

/// Maximize a log-likelihood given in transformed coordinates, then compute
/// delta-method standard errors on the natural scale.
pub(crate) fn maximize(
    negloglik: &mut dyn FnMut(&[f64]) -> f64,
    natural_of_z: &dyn Fn(&[f64]) -> Vec<f64>,
    z0: Vec<f64>,
    opts: &FitOptions,
) -> Maximized {
    let stage1 = optim::nelder_mead(
        negloglik,
        &z0,
        opts.nm_step,
        opts.f_tol,
        opts.x_tol,
        opts.max_evals_per_stage,
    );
    // restart once from the incumbent with a tighter simplex
    let stage2 = optim::nelder_mead(
        negloglik,
        &stage1.x,
        0.2 * opts.nm_step,
        opts.f_tol,
        opts.x_tol,
        opts.max_evals_per_stage,
    );
    let polish = optim::bfgs_polish(
        negloglik,
        &stage2.x,
        opts.f_tol,
        opts.x_tol,
        opts.max_evals_per_stage,
    );
    let (z_hat, fx) = if polish.fx <= stage2.fx {
        (polish.x.clone(), polish.fx)
    } else {
        (stage2.x.clone(), stage2.fx)
    };
    let converged = fx.is_finite() && (stage2.converged || polish.converged);
    let iterations = stage1.iterations + stage2.iterations + polish.iterations;
    let mut eval_count = stage1.evals + stage2.evals + polish.evals;

    let estimates = natural_of_z(&z_hat);
    let dim = z_hat.len();
    let hess = optim::central_hessian(negloglik, &z_hat, opts.hessian_step);
    eval_count += 1 + 2 * dim + 2 * dim * (dim - 1);

    let (std_errors, ci95) = match linalg::invert(dim, &hess) {
        Some(cov_z) if hess.iter().all(|v| v.is_finite()) => {
            // J = d(natural)/dz by central differences
            let n_nat = estimates.len();
            let mut jac = vec![0.0; n_nat * dim];
            let mut zp = z_hat.clone();
            for j in 0..dim {
                let h = 1e-6 * z_hat[j].abs().max(1.0);
                zp[j] = z_hat[j] + h;
                let up = natural_of_z(&zp);
                zp[j] = z_hat[j] - h;
                let dn = natural_of_z(&zp);
                zp[j] = z_hat[j];
                for i in 0..n_nat {
                    jac[i * dim + j] = (up[i] - dn[i]) / (2.0 * h);
                }
            }
            let mut ses = Vec::with_capacity(n_nat);
            let mut ok = true;
            for i in 0..n_nat {
                let mut v = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        v += jac[i * dim + a] * cov_z[a * dim + b] * jac[i * dim + b];
                    }
                }
                if !(v >= 0.0) || !v.is_finite() {
                    ok = false;
                    break;
                }
                ses.push(v.sqrt());
            }
            if ok {
                let ci: Vec<(f64, f64)> = estimates
                    .iter()
                    .zip(&ses)
                    .map(|(&e, &s)| (e - 1.96 * s, e + 1.96 * s))
                    .collect();
                (Some(ses), Some(ci))
            } else {
                (None, None)
            }
        }
        _ => (None, None),
    };

    Maximized {
        z: z_hat,
        loglik: -fx,
        estimates,
        std_errors,
        ci95,
        converged,
        iterations,
        eval_count,
    }
}

// ---------------------------------------------------------------------------
// Univariate fitting
// ---------------------------------------------------------------------------

/// Moment-based starting values.
///
/// Volatility: μ_α from mean(ln(y² + offset)) + 1.27 (the mean of ln χ²₁ is
/// -1.27), φ₀ = 0.9, ψ₀ = 0.1, ν₀ = 8. Durations: μ_α = ln(mean y), k₀ = 1.
pub fn initial_values(family: Family, data: &[f64]) -> Result<Theta> {
    initial_values_with_offset(family, data, crate::obs::DEFAULT_OFFSET)
}

/// [`initial_values`] with an explicit innovation offset.
pub fn initial_values_with_offset(family: Family, data: &[f64], offset: f64) -> Result<Theta> {
    if data.is_empty() {
        return Err(Error::usage("cannot pick starting values from empty data"));
    }
    let n = data.len() as f64;
    let phi0 = 0.9;
    let psi0 = 0.1;
    let mu_alpha0 = if family.is_volatility() {
        data.iter().map(|&y| (y * y + offset).ln()).sum::<f64>() / n + 1.27
    } else {
        let mean = data.iter().sum::<f64>() / n;
        if !(mean > 0.0) {
            return Err(Error::domain("duration data must have a positive mean"));
        }
        mean.ln()
    };
    let theta = Theta::ar(mu_alpha0 * (1.0 - phi0), phi0, psi0)?.with_offset(offset);
    Ok(match family {
        Family::TVol => theta.with_shape(8.0),
        Family::WeibullDur => theta.with_shape(1.0),
        _ => theta,
    })
}

/// Fit a univariate model by maximum likelihood.
pub fn fit(
    family: Family,
    data: &[f64],
    init: Option<Theta>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if data.len() < 2 {
        return Err(Error::usage("need at least 2 observations to fit"));
    }
    let start = match init {
        Some(t) => t,
        None => initial_values(family, data)?,
    };
    let offset = start.offset;
    // validate the data once up front so bad input is a typed error rather
    // than a silently infinite objective
    filter(family, data, &start)?;

    let z0 = transform(family, &start)?;
    let mut negloglik = |z: &[f64]| -> f64 {
        match untransform(family, z, offset) {
            Ok(theta) => match filter(family, data, &theta) {
                Ok(out) if out.loglik.is_finite() => -out.loglik,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };
    let natural = |z: &[f64]| -> Vec<f64> {
        match untransform(family, z, offset) {
            Ok(theta) => natural_params(family, &theta),
            Err(_) => vec![f64::NAN; if family.has_shape() { 4 } else { 3 }],
        }
    };
    let m = maximize(&mut negloglik, &natural, z0, opts);
    let theta = untransform(family, &m.z, offset)?;
    Ok(FitResult {
        family,
        theta,
        report: FitReport {
            param_names: param_names(family),
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

// ---------------------------------------------------------------------------
// Multivariate fitting
// ---------------------------------------------------------------------------

fn mv_names(n: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(3 * n + n_angles(n));
    for i in 1..=n {
        names.push(format!("mu_{i}"));
        names.push(format!("phi_{i}"));
        names.push(format!("psi_{i}"));
    }
    for i in 2..=n {
        for j in 1..i {
            names.push(format!("rho_{i}_{j}"));
        }
    }
    names
}

fn mv_to_z(theta: &MvTheta) -> Result<Vec<f64>> {
    let mut z = Vec::with_capacity(3 * theta.dim() + n_angles(theta.dim()));
    for s in &theta.series {
        if s.psi <= 0.0 {
            return Err(Error::domain("psi must be positive for estimation"));
        }
        z.push(s.mu);
        z.push(s.phi.atanh());
        z.push(s.psi.ln());
    }
    z.extend(corr_param_inverse(&theta.corr));
    Ok(z)
}

fn mv_from_z(n: usize, z: &[f64], offset: f64) -> Result<MvTheta> {
    let mut series = Vec::with_capacity(n);
    for i in 0..n {
        series.push(ArSpec::new(
            z[3 * i],
            z[3 * i + 1].tanh(),
            z[3 * i + 2].exp(),
        )?);
    }
    let corr = corr_param_map(&z[3 * n..])?;
    Ok(MvTheta::new(series, corr)?.with_offset(offset))
}

fn mv_natural(theta: &MvTheta) -> Vec<f64> {
    let n = theta.dim();
    let mut v = Vec::with_capacity(3 * n + n_angles(n));
    for s in &theta.series {
        v.push(s.mu);
        v.push(s.phi);
        v.push(s.psi);
    }
    for i in 1..n {
        for j in 0..i {
            v.push(theta.corr.get(i, j));
        }
    }
    v
}

/// Starting values for the multivariate model: per-series volatility starts
/// plus the sample correlation of the returns (identity if not positive
/// definite).
pub fn initial_values_mv(data: &[Vec<f64>], offset: f64) -> Result<MvTheta> {
    if data.is_empty() {
        return Err(Error::usage("cannot pick starting values from empty data"));
    }
    let n = data[0].len();
    if n < 2 {
        return Err(Error::usage("multivariate model needs at least 2 series"));
    }
    let mut series = Vec::with_capacity(n);
    for k in 0..n {
        let col: Vec<f64> = data.iter().map(|r| r[k]).collect();
        let t = initial_values_with_offset(Family::GaussVol, &col, offset)?;
        series.push(*t.state.as_ar().expect("AR start"));
    }
    // sample correlation, shrunk very slightly toward identity
    let t_len = data.len() as f64;
    let mut cov = vec![0.0; n * n];
    for r in data {
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] += r[i] * r[j] / t_len;
            }
        }
    }
    let mut corr_vals = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (cov[i * n + i] * cov[j * n + j]).sqrt();
            corr_vals[i * n + j] = if i == j {
                1.0
            } else {
                0.999 * cov[i * n + j] / d
            };
        }
    }
    let corr = CorrMatrix::new(n, corr_vals).unwrap_or_else(|_| CorrMatrix::identity(n));
    Ok(MvTheta::new(series, corr)?.with_offset(offset))
}

/// Fit the multivariate Gaussian volatility model: all per-series AR(1)
/// parameters and the correlation matrix jointly.
pub fn fit_mv(data: &[Vec<f64>], init: Option<MvTheta>, opts: &FitOptions) -> Result<MvFitResult> {
    if data.len() < 2 {
        return Err(Error::usage("need at least 2 observations to fit"));
    }
    let start = match init {
        Some(t) => t,
        None => initial_values_mv(data, crate::obs::DEFAULT_OFFSET)?,
    };
    let n = start.dim();
    let offset = start.offset;
    filter_mv(data, &start)?;

    let z0 = mv_to_z(&start)?;
    let n_nat = 3 * n + n_angles(n);
    let mut negloglik = |z: &[f64]| -> f64 {
        match mv_from_z(n, z, offset) {
            Ok(theta) => match filter_mv(data, &theta) {
                Ok(out) if out.loglik.is_finite() => -out.loglik,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };
    let natural = |z: &[f64]| -> Vec<f64> {
        match mv_from_z(n, z, offset) {
            Ok(theta) => mv_natural(&theta),
            Err(_) => vec![f64::NAN; n_nat],
        }
    };
    let m = maximize(&mut negloglik, &natural, z0, opts);
    let theta = mv_from_z(n, &m.z, offset)?;
    Ok(MvFitResult {
        theta,
        report: FitReport {
            param_names: mv_names(n),
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
