//! Weighted linear surrogates fitted on interpretable (binary) designs.
//!
//! * LASSO: cyclic coordinate descent with soft-thresholding on
//!   `sum_j w_j (theta . z_j + b - y_j)^2 + alpha * |theta|_1`, intercept unpenalized.
//! * Linear SVR: subgradient descent on
//!   `0.5 |theta|^2 + C sum_j w_j max(0, |theta . z_j + b - y_j| - epsilon)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            learning_rate: 0.1,
            max_iter: 2000,
        }
    }
}

/// Validates shapes and returns (n, d).
fn check_problem<R: AsRef<[f64]>>(design: &[R], targets: &[f64], weights: &[f64]) -> Result<(usize, usize)> {
    let n = design.len();
    if n == 0 {
        return Err(Error::Empty("surrogate training set"));
    }
    for len in [targets.len(), weights.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    let d = design[0].as_ref().len();
    if let Some(row) = design.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.as_ref().len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("sample weights must be finite and non-negative".into()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite surrogate target".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate("all sample weights are zero".into()));
    }
    Ok((n, d))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Weighted LASSO objective, exposed for tests and diagnostics.
pub fn lasso_objective<R: AsRef<[f64]>>(design: &[R], targets: &[f64], weights: &[f64], alpha: f64, fit: &SurrogateFit) -> f64 {
    let loss: f64 = design
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((z, y), w)| {
            let r = dot(&fit.weights, z.as_ref()) + fit.intercept - y;
            w * r * r
        })
        .sum();
    loss + alpha * fit.weights.iter().map(|t| t.abs()).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fit_weighted_lasso<R: AsRef<[f64]>>(
    design: &[R],
    targets: &[f64],
    weights: &[f64],
    params: &LassoParams,
) -> Result<SurrogateFit> {
    let (n, d) = check_problem(design, targets, weights)?;
    if !(params.alpha >= 0.0) || !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::InvalidParameter("lasso needs alpha >= 0, tol > 0, max_iter > 0".into()));
    }
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|k| design.iter().map(|z| z.as_ref()[k]).collect())
        .collect();
    // sum_j w_j z_jk^2 per column
    let curvature: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().zip(weights).map(|(z, w)| w * z * z).sum())
        .collect();
    let weight_sum: f64 = weights.iter().sum();

    let mut theta = vec![0.0; d];
    let mut intercept = 0.0;
    // residual = y - Z theta - b
    let mut residual = targets.to_vec();
    let half_alpha = params.alpha / 2.0;

    for sweep in 1..=params.max_iter {
        let mut max_change: f64 = 0.0;

        let shift = residual.iter().zip(weights).map(|(r, w)| w * r).sum::<f64>() / weight_sum;
        intercept += shift;
        residual.iter_mut().for_each(|r| *r -= shift);
        max_change = max_change.max(shift.abs());

        for k in 0..d {
            if curvature[k] == 0.0 {
                continue;
            }
            let col = &columns[k];
            let old = theta[k];
            // correlation with the partial residual that excludes coordinate k
            let rho: f64 = col
                .iter()
                .zip(&residual)
                .zip(weights)
                .map(|((z, r), w)| w * z * (r + old * z))
                .sum();
            let new = soft_threshold(rho, half_alpha) / curvature[k];
            let delta = new - old;
            if delta != 0.0 {
                for j in 0..n {
                    residual[j] -= delta * col[j];
                }
                theta[k] = new;
            }
            max_change = max_change.max(delta.abs());
        }

        if max_change < params.tol {
            return Ok(SurrogateFit {
                weights: theta,
                intercept,
                converged: true,
                iterations_used: sweep,
            });
        }
    }
    Ok(SurrogateFit {
        weights: theta,
        intercept,
        converged: false,
        iterations_used: params.max_iter,
    })
}

pub fn svr_objective<R: AsRef<[f64]>>(design: &[R], targets: &[f64], weights: &[f64], c: f64, epsilon: f64, theta: &[f64], intercept: f64) -> f64 {
    let hinge: f64 = design
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((z, y), w)| {
            let r = dot(theta, z.as_ref()) + intercept - y;
            w * (r.abs() - epsilon).max(0.0)
        })
        .sum();
    0.5 * dot(theta, theta) + c * hinge
}

/// Linear epsilon-insensitive SVR by normalized subgradient descent.
///
/// Starting from zero, each of exactly `max_iter` iterations moves a distance
/// of `learning_rate / sqrt(t)` against the subgradient direction. The
/// iterate with the lowest objective (the zero start included) is returned.
/// `converged` reports whether an exact zero subgradient was reached.
pub fn fit_weighted_linear_svr<R: AsRef<[f64]>>(
    design: &[R],
    targets: &[f64],
    weights: &[f64],
    params: &SvrParams,
) -> Result<SurrogateFit> {
    let (n, d) = check_problem(design, targets, weights)?;
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) || !(params.learning_rate > 0.0) || params.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "svr needs C > 0, epsilon >= 0, learning_rate > 0, max_iter > 0".into(),
        ));
    }
    let scaled: Vec<f64> = weights.iter().map(|w| params.c * w).collect();

    let mut theta = vec![0.0; d];
    let mut intercept = 0.0;
    let mut grad = vec![0.0; d];

    let mut best_theta = theta.clone();
    let mut best_intercept = 0.0;
    let mut best_obj = f64::INFINITY;
    let mut converged = false;

    for t in 0..=params.max_iter {
        // objective and subgradient at the current iterate
        grad.copy_from_slice(&theta);
        let mut grad_b = 0.0;
        let mut hinge = 0.0;
        for j in 0..n {
            let z = design[j].as_ref();
            let r = dot(&theta, z) + intercept - targets[j];
            let excess = r.abs() - params.epsilon;
            if excess > 0.0 {
                hinge += scaled[j] * excess;
                let s = scaled[j] * r.signum();
                grad_b += s;
                for (g, zk) in grad.iter_mut().zip(z) {
                    *g += s * zk;
                }
            }
        }
        let obj = 0.5 * dot(&theta, &theta) + hinge;
        if obj < best_obj {
            best_obj = obj;
            best_theta.copy_from_slice(&theta);
            best_intercept = intercept;
        }
        if t == params.max_iter {
            break;
        }
        let norm = (dot(&grad, &grad) + grad_b * grad_b).sqrt();
        if norm == 0.0 {
            converged = true;
            break;
        }
        let step = params.learning_rate / ((t + 1) as f64).sqrt() / norm;
        for (th, g) in theta.iter_mut().zip(&grad) {
            *th -= step * g;
        }
        intercept -= step * grad_b;
    }

    Ok(SurrogateFit {
        weights: best_theta,
        intercept: best_intercept,
        converged,
        iterations_used: params.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tight() -> LassoParams {
        LassoParams { alpha: 0.0, tol: 1e-12, max_iter: 100_000 }
    }

    #[test]
    fn huge_alpha_zeroes_weights() {
        let z = [[0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 0.0]];
        let y = [0.2, 0.9, 0.4, -0.3];
        let w = [1.0, 2.0, 0.5, 1.0];
        let fit = fit_weighted_lasso(&z, &y, &w, &LassoParams { alpha: 1e6, ..Default::default() }).unwrap();
        assert_eq!(fit.weights, vec![0.0, 0.0]);
        let mean = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        assert!((fit.intercept - mean).abs() < 1e-12);
        assert!(fit.converged);
    }

    #[test]
    fn unpenalized_two_point_fit() {
        // normal equations for [[0,1],[1,1]] beta = [0,1] give slope 1, intercept 0
        let fit = fit_weighted_lasso(&[[0.0], [1.0]], &[0.0, 1.0], &[1.0, 1.0], &tight()).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 1e-6);
        assert!(fit.intercept.abs() < 1e-6);
    }

    #[test]
    fn duplication_equals_doubled_weight() {
        let z = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let y = [1.0, 0.5, 2.0];
        let p = LassoParams { alpha: 0.1, tol: 1e-10, max_iter: 10_000 };
        let a = fit_weighted_lasso(&z, &y, &[2.0, 1.0, 1.0], &p).unwrap();
        let zd = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let b = fit_weighted_lasso(&zd, &[1.0, 1.0, 0.5, 2.0], &[1.0; 4], &p).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!((a.intercept - b.intercept).abs() < 1e-8);
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(matches!(
            fit_weighted_lasso(&[[1.0]], &[1.0], &[0.0], &LassoParams::default()),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            fit_weighted_linear_svr(&[[1.0]], &[1.0], &[0.0], &SvrParams::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn wide_tube_keeps_zero_solution() {
        let z = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]];
        let y = [0.1, -0.2, 0.15, 0.05];
        // weighted median is 0.05; the largest deviation from it is 0.25
        let p = SvrParams { epsilon: 0.3, ..Default::default() };
        let fit = fit_weighted_linear_svr(&z, &y, &[1.0; 4], &p).unwrap();
        assert_eq!(fit.weights, vec![0.0, 0.0]);
        assert!(y.iter().all(|v| (v - fit.intercept).abs() <= p.epsilon));
        assert!(fit.converged);
    }

    /// Oracle: dense grid over (theta, b) for the 1-D two-point problem.
    fn grid_minimum() -> (f64, f64) {
        let z = [[0.0], [1.0]];
        let y = [0.0, 1.0];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for k in 0..=400 {
                let theta = -1.0 + 3.0 * i as f64 / 400.0;
                let b = -1.0 + 2.0 * k as f64 / 400.0;
                let obj = svr_objective(&z, &y, &[1.0, 1.0], 100.0, 0.0, &[theta], b);
                if obj < best.0 {
                    best = (obj, theta, b);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn svr_two_point_matches_grid() {
        let (theta, b) = grid_minimum();
        assert!((theta - 1.0).abs() < 0.01 && b.abs() < 0.01);
        let p = SvrParams { c: 100.0, epsilon: 0.0, ..Default::default() };
        let fit = fit_weighted_linear_svr(&[[0.0], [1.0]], &[0.0, 1.0], &[1.0, 1.0], &p).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn svr_weight_and_c_trade_off() {
        let z = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0], [1.0, 0.0]];
        let y = [0.8, 0.1, 0.9, 0.0, 0.7];
        let w = [0.3, 0.9, 0.5, 0.7, 0.2];
        let base = SvrParams { c: 2.0, epsilon: 0.05, ..Default::default() };
        let a = fit_weighted_linear_svr(&z, &y, &w, &base).unwrap();
        // power-of-two scaling keeps every product C * w_j bit-identical
        let w4: Vec<f64> = w.iter().map(|v| v * 4.0).collect();
        let b = fit_weighted_linear_svr(&z, &y, &w4, &SvrParams { c: 0.5, ..base }).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            svr_objective(&z, &y, &w, 2.0, 0.05, &a.weights, a.intercept),
            svr_objective(&z, &y, &w4, 0.5, 0.05, &b.weights, b.intercept)
        );
    }

    fn random_problem(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut rng = crate::rng::stream(seed, &["surrogate-prop"]);
        let n = rng.gen_range(3..40);
        let d = rng.gen_range(1..6);
        let z: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        (z, y, w)
    }

    proptest! {
        #[test]
        fn lasso_objective_never_increases(seed in any::<u64>(), alpha in 0.0f64..2.0) {
            let (z, y, w) = random_problem(seed);
            let mut last = f64::INFINITY;
            for sweeps in 1..15 {
                let fit = fit_weighted_lasso(&z, &y, &w, &LassoParams { alpha, tol: 1e-300, max_iter: sweeps }).unwrap();
                let obj = lasso_objective(&z, &y, &w, alpha, &fit);
                prop_assert!(obj <= last + 1e-12 * last.abs().max(1.0));
                last = obj;
            }
        }

        #[test]
        fn svr_beats_zero_and_is_deterministic(seed in any::<u64>(), c in 0.1f64..5.0, eps in 0.0f64..0.5) {
            let (z, y, w) = random_problem(seed);
            let p = SvrParams { c, epsilon: eps, learning_rate: 0.1, max_iter: 300 };
            let fit = fit_weighted_linear_svr(&z, &y, &w, &p).unwrap();
            let zero = svr_objective(&z, &y, &w, c, eps, &vec![0.0; z[0].len()], 0.0);
            prop_assert!(svr_objective(&z, &y, &w, c, eps, &fit.weights, fit.intercept) <= zero);
            prop_assert_eq!(fit_weighted_linear_svr(&z, &y, &w, &p).unwrap(), fit);
        }
    }
}
