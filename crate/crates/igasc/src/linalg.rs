//! Small dense linear algebra helpers.
//!
//! Matrices are row-major `Vec<f64>` of length n·n. Everything here operates
//! on the small systems this crate needs (correlation matrices of a few
//! series, Hessians of a dozen parameters), so plain O(n³) loops are fine.

/// Cholesky factor L (lower triangular, row-major) of a symmetric
/// positive-definite matrix, or None if the matrix is not PD.
pub fn cholesky_lower(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve L x = b in place for lower-triangular L.
pub fn forward_solve(n: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Matrix inverse by Gauss-Jordan elimination with partial pivoting.
/// Returns None when the matrix is numerically singular.
pub fn invert(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n)
        .map(|ij| if ij % (n + 1) == 0 { 1.0 } else { 0.0 })
        .collect();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-300 || !best.is_finite() {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                m.swap(col * n + c, pivot * n + c);
                inv.swap(col * n + c, pivot * n + c);
            }
        }
        let diag = m[col * n + col];
        for c in 0..n {
            m[col * n + c] /= diag;
            inv[col * n + c] /= diag;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r * n + col];
            if factor == 0.0 {
                continue;
            }
            for c in 0..n {
                m[r * n + c] -= factor * m[col * n + c];
                inv[r * n + c] -= factor * inv[col * n + c];
            }
        }
    }
    Some(inv)
}

/// Spectral radius by scaled repeated squaring (Gelfand's formula):
/// ρ(A) = lim ‖A^k‖^{1/k} with k = 2^60, normalizing at each squaring.
pub fn spectral_radius(n: usize, a: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let inf_norm = |m: &[f64]| -> f64 {
        (0..n)
            .map(|i| (0..n).map(|j| m[i * n + j].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    let mut b = a.to_vec();
    let mut log_rho = 0.0;
    let mut weight = 1.0;
    for _ in 0..60 {
        let norm = inf_norm(&b);
        if norm == 0.0 {
            return 0.0;
        }
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        log_rho += weight * norm.ln();
        weight *= 0.5;
        let inv_norm = 1.0 / norm;
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let v = b[i * n + k] * inv_norm;
                if v == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i * n + j] += v * (b[k * n + j] * inv_norm);
                }
            }
        }
        b = next;
    }
    log_rho.exp()
}
