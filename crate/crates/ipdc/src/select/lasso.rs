//! Single-response Lasso by cyclic coordinate descent:
//!
//!   min over b of  (1/2n) * ||y - X b||^2 + lambda * ||b||_1
//!
//! used to refit each response separately on the rows kept by the group
//! stage, with its own cross-validated penalty. Shares the stall-then-KKT
//! convergence discipline of the group solver.

use rand_chacha::ChaCha12Rng;

use crate::error::IpdcError;
use crate::select::design::AugmentedDesign;
use crate::select::glasso::{assign_folds, make_lambda_grid, GlassoOpts};
use crate::Result;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn soft(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

fn objective(residual: &[f64], b: &[f64], lambda: f64, n: usize) -> f64 {
    dot(residual, residual) / (2.0 * n as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

fn fresh_residual(cols: &[Vec<f64>], y: &[f64], b: &[f64]) -> Vec<f64> {
    let mut residual = y.to_vec();
    for (j, col) in cols.iter().enumerate() {
        if b[j] != 0.0 {
            for (ri, &ci) in residual.iter_mut().zip(col.iter()) {
                *ri -= b[j] * ci;
            }
        }
    }
    residual
}

fn kkt_violation(cols: &[Vec<f64>], residual: &[f64], b: &[f64], lambda: f64, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, col) in cols.iter().enumerate() {
        let grad = dot(col, residual) / n as f64;
        let violation = if b[j] == 0.0 {
            (grad.abs() - lambda).max(0.0)
        } else {
            (grad - lambda * b[j].signum()).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

pub(crate) struct LassoCore {
    pub b: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    pub objective: f64,
}

pub(crate) fn lasso_core(
    cols: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    opts: &GlassoOpts,
    warm: Option<&[f64]>,
) -> LassoCore {
    let d = cols.len();
    let n = y.len();
    let mut b = match warm {
        Some(w) => w.to_vec(),
        None => vec![0.0; d],
    };
    let mut residual = fresh_residual(cols, y, &b);
    let col_norm2: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut prev = objective(&residual, &b, lambda, n);
    let mut sweeps = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;

    while sweeps < opts.max_sweeps {
        for j in 0..d {
            let norm2 = col_norm2[j];
            if norm2 <= 0.0 {
                continue;
            }
            let col = &cols[j];
            let c = dot(col, &residual) + norm2 * b[j];
            let new = soft(c, n as f64 * lambda) / norm2;
            let delta = new - b[j];
            if delta != 0.0 {
                for (ri, &ci) in residual.iter_mut().zip(col.iter()) {
                    *ri -= delta * ci;
                }
                b[j] = new;
            }
        }
        sweeps += 1;
        let f = objective(&residual, &b, lambda, n);
        if prev - f <= opts.tol * prev.abs().max(1.0) {
            residual = fresh_residual(cols, y, &b);
            kkt = kkt_violation(cols, &residual, &b, lambda, n);
            if kkt <= opts.kkt_tol {
                converged = true;
                break;
            }
        }
        prev = f;
    }
    if !converged {
        residual = fresh_residual(cols, y, &b);
        kkt = kkt_violation(cols, &residual, &b, lambda, n);
        converged = kkt <= opts.kkt_tol;
    }
    let final_objective = objective(&residual, &b, lambda, n);
    LassoCore {
        b,
        sweeps,
        converged,
        kkt_violation: kkt,
        objective: final_objective,
    }
}

/// Mean held-out squared error per grid point: descending-penalty path
/// with warm starts, refit on each fold's complement, errors accumulated
/// on the held rows and divided by n.
pub(crate) fn lasso_cv_errors(
    cols: &[Vec<f64>],
    y: &[f64],
    grid: &[f64],
    fold_of: &[usize],
    folds: usize,
    opts: &GlassoOpts,
) -> Vec<f64> {
    let n = y.len();
    let mut sse = vec![0.0; grid.len()];
    for fold in 0..folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        let train_cols: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| train_rows.iter().map(|&i| c[i]).collect())
            .collect();
        let train_y: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();

        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let core = lasso_core(&train_cols, &train_y, lambda, opts, warm.as_deref());
            for &i in &test_rows {
                let mut pred = 0.0;
                for (jj, col) in cols.iter().enumerate() {
                    if core.b[jj] != 0.0 {
                        pred += core.b[jj] * col[i];
                    }
                }
                let err = y[i] - pred;
                sse[g] += err * err;
            }
            warm = Some(core.b);
        }
    }
    sse.iter().map(|s| s / n as f64).collect()
}

/// Result of one response's refit, mapped back to raw term scale.
#[derive(Debug, Clone)]
pub struct ResponseFit {
    pub lambda: f64,
    /// Coefficients aligned with the candidate term indices handed in.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub kkt_violation: f64,
}

/// Cross-validated Lasso for one response restricted to the design columns
/// in `active` (indices into `design.terms`). Coefficients come back
/// de-standardized and aligned with `active`; the intercept restores the
/// centering that the design removed.
pub fn lasso_refit_response(
    design: &AugmentedDesign,
    response: usize,
    active: &[usize],
    folds: usize,
    grid_size: usize,
    rng: &mut ChaCha12Rng,
    opts: &GlassoOpts,
) -> Result<ResponseFit> {
    let n = design.n;
    let y = &design.y[response];
    if active.is_empty() {
        return Ok(ResponseFit {
            lambda: 0.0,
            coef: vec![],
            intercept: design.y_center[response],
            converged: true,
            kkt_violation: 0.0,
        });
    }
    if folds < 2 || folds > n {
        return Err(IpdcError::Config(format!(
            "folds must be between 2 and n = {n}, got {folds}"
        )));
    }
    let cols: Vec<Vec<f64>> = active.iter().map(|&j| design.cols[j].clone()).collect();

    let lam_max = cols
        .iter()
        .map(|c| (dot(c, y) / n as f64).abs())
        .fold(0.0, f64::max);
    if lam_max <= 0.0 {
        // Response is orthogonal to every candidate: intercept-only model.
        return Ok(ResponseFit {
            lambda: 0.0,
            coef: vec![0.0; active.len()],
            intercept: design.y_center[response],
            converged: true,
            kkt_violation: 0.0,
        });
    }
    let grid = make_lambda_grid(lam_max, grid_size);

    let fold_of = assign_folds(n, folds, rng);
    let errors = lasso_cv_errors(&cols, y, &grid, &fold_of, folds, opts);
    let mut best = 0;
    for (g, &s) in errors.iter().enumerate() {
        if s < errors[best] {
            best = g;
        }
    }
    let lambda = grid[best];

    let core = lasso_core(&cols, y, lambda, opts, None);
    let mut coef = Vec::with_capacity(active.len());
    let mut intercept = design.y_center[response];
    for (jj, &j) in active.iter().enumerate() {
        let raw = core.b[jj] / design.scale[j];
        coef.push(raw);
        intercept -= raw * design.center[j];
    }
    Ok(ResponseFit {
        lambda,
        coef,
        intercept,
        converged: core.converged,
        kkt_violation: core.kkt_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, RngStream};
    use crate::screen::ScreenSets;
    use crate::select::design::build_design;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn soft_threshold_basics() {
        assert_eq!(soft(3.0, 1.0), 2.0);
        assert_eq!(soft(-3.0, 1.0), -2.0);
        assert_eq!(soft(0.5, 1.0), 0.0);
        assert_eq!(soft(-0.5, 1.0), 0.0);
    }

    #[test]
    fn single_column_has_a_closed_form() {
        // One centered column c, one response: the solution is
        // soft(c^T y / n, lambda) * n / ||c||^2.
        let col = vec![1.0, -1.0, 2.0, -2.0];
        let y = vec![2.0, -1.0, 3.5, -4.0];
        let n = 4.0;
        let lambda = 0.3;
        let core = lasso_core(
            std::slice::from_ref(&col),
            &y,
            lambda,
            &GlassoOpts::default(),
            None,
        );
        let expected = soft(dot(&col, &y), n * lambda) / dot(&col, &col);
        assert!((core.b[0] - expected).abs() <= 1e-12);
        assert!(core.converged);
    }

    #[test]
    fn noiseless_refit_recovers_the_coefficients() {
        let mut rng = RngStream::new(11, 0).rng();
        let n = 80;
        let x = Array2::from_shape_fn((n, 4), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array2::from_shape_fn((n, 1), |(i, _)| {
            1.5 + 2.0 * x[[i, 0]] - 1.0 * x[[i, 2]] + 0.5 * x[[i, 0]] * x[[i, 1]]
        });
        let data = Dataset::new(x, y, None, None).unwrap();
        let sets = ScreenSets {
            p: 4,
            q: 1,
            mains: vec![0, 2],
            pairs: vec![(0, 1)],
        };
        let design = build_design(&data, &sets, true).unwrap();
        let mut cv_rng = RngStream::new(11, 1).rng();
        let fit = lasso_refit_response(
            &design,
            0,
            &[0, 1, 2],
            5,
            100,
            &mut cv_rng,
            &GlassoOpts::default(),
        )
        .unwrap();
        assert!(fit.converged);
        // CV on noiseless data drives lambda to the small end of the grid,
        // so recovery is near-exact rather than exact.
        assert!((fit.coef[0] - 2.0).abs() < 0.05, "coef {:?}", fit.coef);
        assert!((fit.coef[1] + 1.0).abs() < 0.05);
        assert!((fit.coef[2] - 0.5).abs() < 0.05);
        assert!((fit.intercept - 1.5).abs() < 0.05);
    }

    #[test]
    fn empty_candidate_set_gives_intercept_only() {
        let mut rng = RngStream::new(12, 0).rng();
        let x = Array2::from_shape_fn((20, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array2::from_shape_fn((20, 1), |_| 4.0 + rng.sample::<f64, _>(StandardNormal));
        let mean = y.column(0).mean().unwrap();
        let data = Dataset::new(x, y, None, None).unwrap();
        let sets = ScreenSets {
            p: 3,
            q: 1,
            mains: vec![0],
            pairs: vec![],
        };
        let design = build_design(&data, &sets, true).unwrap();
        let mut cv_rng = RngStream::new(12, 1).rng();
        let fit =
            lasso_refit_response(&design, 0, &[], 5, 50, &mut cv_rng, &GlassoOpts::default())
                .unwrap();
        assert!(fit.coef.is_empty());
        assert!((fit.intercept - mean).abs() <= 1e-12);
    }
}
