//! Multivariate Gaussian volatility model.
//!
//! Returns are jointly Gaussian, y_t | α_t ~ N(0, D Σ D) with
//! D = diag(e^{α_it/2}) and Σ a correlation matrix. Each series keeps its own
//! AR(1) state recursion, driven by the marginal score innovation
//! η_it = Φ⁻¹(F_{χ²₁}(ε_it²)). The η_it are marginally standard normal but
//! the vector η_t is not jointly Gaussian: its dependence is the copula
//! induced by Σ through ε_t.

use crate::error::{Error, Result};
use crate::linalg;
use crate::obs::DEFAULT_OFFSET;
use crate::specfun;
use crate::state::ArSpec;

const LN_2PI: f64 = 1.8378770664093454835606594728112;

/// A positive-definite correlation matrix with its Cholesky factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    dim: usize,
    values: Vec<f64>,
    chol: Vec<f64>,
}

impl CorrMatrix {
    /// Validate and wrap a row-major symmetric matrix: unit diagonal,
    /// off-diagonals in (-1, 1), Cholesky must succeed.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<CorrMatrix> {
        if dim < 1 || values.len() != dim * dim {
            return Err(Error::usage(format!(
                "expected {dim}x{dim} matrix, got {} entries",
                values.len()
            )));
        }
        for i in 0..dim {
            if (values[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::domain("correlation matrix diagonal must be 1"));
            }
            for j in 0..i {
                let a = values[i * dim + j];
                let b = values[j * dim + i];
                if (a - b).abs() > 1e-12 {
                    return Err(Error::domain("correlation matrix must be symmetric"));
                }
                if !(a > -1.0 && a < 1.0) {
                    return Err(Error::domain(format!("correlation {a} outside (-1, 1)")));
                }
            }
        }
        let chol = linalg::cholesky_lower(dim, &values)
            .ok_or_else(|| Error::domain("correlation matrix is not positive definite"))?;
        Ok(CorrMatrix { dim, values, chol })
    }

    pub fn identity(dim: usize) -> CorrMatrix {
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            values[i * dim + i] = 1.0;
        }
        CorrMatrix::new(dim, values).expect("identity is a correlation matrix")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn chol_lower(&self) -> &[f64] {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| 2.0 * self.chol[i * self.dim + i].ln())
            .sum()
    }
}

/// Number of angles parameterizing an n×n correlation matrix.
pub fn n_angles(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

fn dim_from_angles(len: usize) -> Result<usize> {
    for n in 2..=64 {
        if n_angles(n) == len {
            return Ok(n);
        }
    }
    Err(Error::usage(format!(
        "{len} angles do not correspond to any matrix dimension"
    )))
}

/// Build a correlation matrix from hyperspherical angles of its Cholesky
/// factor. Row i of L uses angles θ_{i1..i,i-1}:
/// L_ij = cos θ_ij · Π_{m<j} sin θ_im, L_ii = Π_{m<i} sin θ_im.
/// All angles at π/2 give the identity; for N = 2, ρ = cos θ₁.
pub fn corr_param_map(angles: &[f64]) -> Result<CorrMatrix> {
    let n = dim_from_angles(angles.len())?;
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::domain("angles must be finite"));
    }
    let mut l = vec![0.0; n * n];
    l[0] = 1.0;
    let mut idx = 0;
    for i in 1..n {
        let mut cumsin = 1.0;
        for j in 0..i {
            let th = angles[idx];
            idx += 1;
            l[i * n + j] = th.cos() * cumsin;
            cumsin *= th.sin();
        }
        l[i * n + i] = cumsin;
    }
    // sigma = L L'
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..=i.min(j) {
                s += l[i * n + k] * l[j * n + k];
            }
            values[i * n + j] = s;
        }
        values[i * n + i] = 1.0;
    }
    CorrMatrix::new(n, values)
}

/// Inverse of [`corr_param_map`]: recover the angles (each in (0, π)) from a
/// positive-definite correlation matrix. Round-trips within 1e-10.
pub fn corr_param_inverse(corr: &CorrMatrix) -> Vec<f64> {
    let n = corr.dim;
    let l = &corr.chol;
    let mut angles = Vec::with_capacity(n_angles(n));
    for i in 1..n {
        let mut cumsin = 1.0;
        for j in 0..i {
            let c = (l[i * n + j] / cumsin).clamp(-1.0, 1.0);
            let th = c.acos();
            angles.push(th);
            cumsin *= th.sin();
        }
    }
    angles
}

/// Parameters of the multivariate model: per-series AR(1) dynamics, the
/// correlation matrix, and the shared innovation-map offset.
#[derive(Debug, Clone, PartialEq)]
pub struct MvTheta {
    pub series: Vec<ArSpec>,
    pub corr: CorrMatrix,
    pub offset: f64,
}

impl MvTheta {
    pub fn new(series: Vec<ArSpec>, corr: CorrMatrix) -> Result<MvTheta> {
        if series.len() != corr.dim() {
            return Err(Error::usage(format!(
                "{} series specs for a {}-dimensional correlation matrix",
                series.len(),
                corr.dim()
            )));
        }
        if series.len() < 2 {
            return Err(Error::usage("multivariate model needs at least 2 series"));
        }
        Ok(MvTheta {
            series,
            corr,
            offset: DEFAULT_OFFSET,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> MvTheta {
        self.offset = offset;
        self
    }

    pub fn dim(&self) -> usize {
        self.series.len()
    }
}

fn validate_vectors(y: &[f64], alpha: &[f64], n: usize) -> Result<()> {
    if y.len() != n || alpha.len() != n {
        return Err(Error::usage(format!(
            "expected vectors of length {n}, got y: {}, alpha: {}",
            y.len(),
            alpha.len()
        )));
    }
    if y.iter().chain(alpha).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite entry in y or alpha"));
    }
    Ok(())
}

/// Joint conditional log-density ln N(y; 0, DΣD) with D_ii = e^{α_i/2},
/// evaluated through the Cholesky factor of Σ and ε = D⁻¹ y.
pub fn mv_cond_logpdf(y: &[f64], alpha: &[f64], theta: &MvTheta) -> Result<f64> {
    let n = theta.dim();
    validate_vectors(y, alpha, n)?;
    let mut w: Vec<f64> = y
        .iter()
        .zip(alpha)
        .map(|(&yi, &ai)| yi * (-0.5 * ai).exp())
        .collect();
    linalg::forward_solve(n, theta.corr.chol_lower(), &mut w);
    let quad: f64 = w.iter().map(|v| v * v).sum();
    let alpha_sum: f64 = alpha.iter().sum();
    Ok(-0.5 * (n as f64) * LN_2PI - 0.5 * alpha_sum - 0.5 * theta.corr.log_det() - 0.5 * quad)
}

/// Component-wise marginal score innovations: for each series,
/// u_i = F_{χ²₁}(ε_i² + offset) and η_i = Φ⁻¹(u_i).
pub fn mv_innovation(y: &[f64], alpha: &[f64], theta: &MvTheta) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = theta.dim();
    validate_vectors(y, alpha, n)?;
    let mut u = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    for i in 0..n {
        let eps = y[i] * (-0.5 * alpha[i]).exp();
        let ui = specfun::chi1_cdf(eps * eps + theta.offset);
        u.push(ui);
        eta.push(specfun::std_normal_quantile(ui));
    }
    Ok((u, eta))
}
