//! Derivative-free and quasi-Newton minimization used by estimation.
//!
//! The fitting pipeline is Nelder-Mead (with one restart from the incumbent)
//! followed by a BFGS polish using central-difference gradients. Objectives
//! must return +inf, not NaN, for infeasible points.

pub(crate) struct OptimOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization with standard coefficients.
pub(crate) fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    initial_step: f64,
    f_tol: f64,
    x_tol: f64,
    max_evals: usize,
) -> OptimOutcome {
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], n: &mut usize| {
        *n += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1e-8 {
            p[i].abs() * initial_step
        } else {
            initial_step
        };
        p[i] += step;
        simplex.push(p);
    }
    let mut scores: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut iterations = 0usize;
    let mut converged = false;
    while evals < max_evals {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = scores[worst] - scores[best];
        let max_diff = (0..dim)
            .map(|d| {
                order
                    .iter()
                    .map(|&i| simplex[i][d])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if spread.abs() < f_tol && max_diff < x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[i][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + alpha * (centroid[d] - simplex[worst][d]))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < scores[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + gamma * (reflect[d] - centroid[d]))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                scores[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                scores[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < scores[second_worst] {
            simplex[worst] = reflect;
            scores[worst] = f_reflect;
            continue;
        }
        let contract: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + rho * (simplex[worst][d] - centroid[d]))
            .collect();
        let f_contract = eval(&contract, &mut evals);
        if f_contract < scores[worst] {
            simplex[worst] = contract;
            scores[worst] = f_contract;
            continue;
        }
        // shrink toward the best vertex
        let best_point = simplex[best].clone();
        for &i in order.iter().skip(1) {
            for d in 0..dim {
                simplex[i][d] = best_point[d] + sigma * (simplex[i][d] - best_point[d]);
            }
            scores[i] = eval(&simplex[i].clone(), &mut evals);
        }
    }

    let (best, &fx) = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    OptimOutcome {
        x: simplex[best].clone(),
        fx,
        iterations,
        evals,
        converged,
    }
}

/// Central-difference gradient with per-coordinate relative steps.
pub(crate) fn central_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    rel_step: f64,
    evals: &mut usize,
) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        *evals += 2;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// BFGS with backtracking Armijo line search and numerical gradients.
pub(crate) fn bfgs_polish(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    f_tol: f64,
    x_tol: f64,
    max_evals: usize,
) -> OptimOutcome {
    const GRAD_STEP: f64 = 1e-6;
    let dim = x0.len();
    let mut evals = 0usize;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    evals += 1;
    if !fx.is_finite() {
        return OptimOutcome {
            x,
            fx,
            iterations: 0,
            evals,
            converged: false,
        };
    }
    let mut g = central_gradient(f, &x, GRAD_STEP, &mut evals);
    // inverse Hessian approximation, starts at identity
    let mut h: Vec<f64> = (0..dim * dim)
        .map(|ij| if ij % (dim + 1) == 0 { 1.0 } else { 0.0 })
        .collect();

    let mut iterations = 0usize;
    let mut converged = false;
    while evals + 2 * dim < max_evals {
        iterations += 1;
        let mut dir = vec![0.0; dim];
        for i in 0..dim {
            for j in 0..dim {
                dir[i] -= h[i * dim + j] * g[j];
            }
        }
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if slope >= 0.0 {
            // not a descent direction; reset to steepest descent
            for i in 0..dim {
                dir[i] = -g[i];
                for j in 0..dim {
                    h[i * dim + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();

        let mut step = 1.0;
        let mut x_new = x.clone();
        let mut f_new = f64::INFINITY;
        let mut ok = false;
        for _ in 0..40 {
            for i in 0..dim {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = f(&x_new);
            evals += 1;
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if !ok {
            converged = true; // no further progress possible along this path
            break;
        }

        let g_new = central_gradient(f, &x_new, GRAD_STEP, &mut evals);
        let s: Vec<f64> = (0..dim).map(|i| x_new[i] - x[i]).collect();
        let yv: Vec<f64> = (0..dim).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();

        let df = fx - f_new;
        let dx = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = x_new.clone();
        fx = f_new;
        g = g_new;
        if df.abs() < f_tol && dx < x_tol {
            converged = true;
            break;
        }

        if sy > 1e-12 {
            // BFGS inverse update: H <- (I - r s y')H(I - r y s') + r s s'
            let r = 1.0 / sy;
            let mut hy = vec![0.0; dim];
            for i in 0..dim {
                for j in 0..dim {
                    hy[i] += h[i * dim + j] * yv[j];
                }
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i * dim + j] +=
                        -r * (s[i] * hy[j] + hy[i] * s[j]) + r * (1.0 + r * yhy) * s[i] * s[j];
                }
            }
        }
    }
    OptimOutcome {
        x,
        fx,
        iterations,
        evals,
        converged,
    }
}

/// Central-difference Hessian with step h_i = rel_step · max(1, |x_i|).
pub(crate) fn central_hessian(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    rel_step: f64,
) -> Vec<f64> {
    let dim = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1.0)).collect();
    let mut hess = vec![0.0; dim * dim];
    let mut xp = x.to_vec();
    for i in 0..dim {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        hess[i * dim + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for i in 0..dim {
        for j in 0..i {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[j] = x[j] - h[j];
            let fmm = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i * dim + j] = v;
            hess[j * dim + i] = v;
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_solves_rosenbrock() {
        let mut f = |x: &[f64]| rosenbrock(x);
        let out = nelder_mead(&mut f, &[-1.2, 1.0], 0.1, 1e-12, 1e-9, 20_000);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-4, "x = {:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bfgs_polishes_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0;
        let out = bfgs_polish(&mut f, &[0.0, 0.0], 1e-12, 1e-10, 5_000);
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-6);
        assert!((out.x[1] + 1.0).abs() < 1e-6);
        assert!((out.fx - 5.0).abs() < 1e-10);
    }

    #[test]
    fn hessian_of_quadratic() {
        let mut f = |x: &[f64]| 2.0 * x[0] * x[0] + 3.0 * x[0] * x[1] + 4.0 * x[1] * x[1];
        let h = central_hessian(&mut f, &[0.3, -0.2], 1e-4);
        assert!((h[0] - 4.0).abs() < 1e-5);
        assert!((h[1] - 3.0).abs() < 1e-5);
        assert!((h[2] - 3.0).abs() < 1e-5);
        assert!((h[3] - 8.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_regions_are_avoided() {
        // +inf outside the unit disc
        let mut f = |x: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 > 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.5).powi(2) + x[1] * x[1]
            }
        };
        let out = nelder_mead(&mut f, &[-0.5, 0.3], 0.1, 1e-12, 1e-9, 10_000);
        assert!((out.x[0] - 0.5).abs() < 1e-4);
        assert!(out.x[1].abs() < 1e-4);
    }
}
