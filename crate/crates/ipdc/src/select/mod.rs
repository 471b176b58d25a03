//! Second-stage estimation on a screened candidate set.
//!
//! The candidate main effects and pairs become an augmented design of
//! centered (optionally standardized) columns. With several responses, a
//! grouped penalty ties each term's coefficients together across
//! responses; rows surviving a norm threshold are then re-estimated per
//! response with an ordinary L1 penalty and its own cross-validated
//! strength. With a single response the pipeline collapses to one
//! cross-validated L1 fit.

mod design;
mod glasso;
mod lasso;

pub use design::{build_design, lambda_max, AugmentedDesign, Term};
pub use glasso::{
    group_lasso_fit, group_lasso_reference, make_lambda_grid, select_lambda_cv, threshold_rows,
    CvOutcome, GlassoOpts, GroupLassoFit, ThresholdedRows,
};
pub use lasso::{lasso_refit_response, ResponseFit};

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha12Rng;
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::error::IpdcError;
use crate::screen::ScreenSets;
use crate::Result;

use self::glasso::assign_folds;
use self::lasso::{lasso_core, lasso_cv_errors};

/// How the grouped penalty strength is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// K-fold cross-validation over a descending geometric grid.
    Cv,
    Fixed(f64),
}

/// How the row-norm cutoff after the grouped fit is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// 1e-6 times the largest row norm.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct SelectConfig {
    pub lambda: LambdaRule,
    pub folds: usize,
    pub grid_size: usize,
    pub threshold: ThresholdRule,
    pub standardize: bool,
    /// Re-estimate each response separately on the surviving rows.
    pub refit: bool,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            lambda: LambdaRule::Cv,
            folds: 5,
            grid_size: 100,
            threshold: ThresholdRule::Auto,
            standardize: true,
            refit: true,
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

fn validate_config(config: &SelectConfig, n: usize) -> Result<()> {
    let mut problems = Vec::new();
    if let LambdaRule::Fixed(l) = config.lambda {
        if !l.is_finite() || l < 0.0 {
            problems.push(format!(
                "fixed lambda must be nonnegative and finite, got {l}"
            ));
        }
    }
    if config.folds < 2 {
        problems.push(format!("folds must be at least 2, got {}", config.folds));
    } else if config.folds > n {
        problems.push(format!(
            "folds must not exceed the number of rows ({n}), got {}",
            config.folds
        ));
    }
    if config.grid_size == 0 {
        problems.push("grid size must be positive".to_string());
    }
    if let ThresholdRule::Fixed(t) = config.threshold {
        if !t.is_finite() || t < 0.0 {
            problems.push(format!(
                "fixed threshold must be nonnegative and finite, got {t}"
            ));
        }
    }
    if !(config.tol.is_finite() && config.tol > 0.0) {
        problems.push(format!("tol must be a positive number, got {}", config.tol));
    }
    if config.max_sweeps == 0 {
        problems.push("max sweeps must be positive".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(IpdcError::Config(problems.join("; ")))
    }
}

/// Convergence evidence for the whole pipeline: sweep count and objective
/// refer to the primary (grouped or single-response) fit; `converged` and
/// `kkt_violation` fold in the per-response refits as well.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    pub objective: f64,
    pub cv_errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SelectResult {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub config: SelectConfig,
    /// Every candidate term, in design order (mains then pairs).
    pub terms: Vec<Term>,
    /// Grouped-stage penalty actually used.
    pub lambda: f64,
    pub threshold_used: f64,
    /// d x q grouped-stage coefficients (raw term scale) after row
    /// thresholding; for a single response, the L1 fit itself.
    pub b_tilde: Array2<f64>,
    pub group_intercept: Vec<f64>,
    /// Terms whose rows survive thresholding, in design order.
    pub row_support: Vec<Term>,
    pub per_response_lambda: Vec<f64>,
    /// Terms with a nonzero final coefficient, per response.
    pub per_response_support: Vec<Vec<Term>>,
    /// Final coefficients per response, aligned with `row_support`.
    pub per_response_coef: Vec<Vec<f64>>,
    pub per_response_intercept: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SelectResult {
    /// Predict all responses for new rows of the original covariates.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        for term in &self.row_support {
            let highest = match term {
                Term::Main(j) => *j,
                Term::Inter(k, l) => (*k).max(*l),
            };
            assert!(
                highest < x.ncols(),
                "model references column {} but the input has only {} columns",
                highest + 1,
                x.ncols()
            );
        }
        let rows = x.nrows();
        let mut out = Array2::zeros((rows, self.q));
        let mut vals = vec![0.0; self.row_support.len()];
        for i in 0..rows {
            let row = x.row(i);
            for (t, term) in self.row_support.iter().enumerate() {
                vals[t] = term.eval_row(row);
            }
            for r in 0..self.q {
                let mut acc = self.per_response_intercept[r];
                for (t, &v) in vals.iter().enumerate() {
                    let coef = self.per_response_coef[r][t];
                    if coef != 0.0 {
                        acc += coef * v;
                    }
                }
                out[[i, r]] = acc;
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        // row_support is a subsequence of terms; recover the row indices.
        let mut support_rows = Vec::with_capacity(self.row_support.len());
        let mut cursor = 0;
        for term in &self.row_support {
            while self.terms[cursor] != *term {
                cursor += 1;
            }
            support_rows.push(cursor);
            cursor += 1;
        }

        let group_coefficients: Vec<Value> = support_rows
            .iter()
            .zip(self.row_support.iter())
            .map(|(&j, term)| {
                let coef: Vec<f64> = self.b_tilde.row(j).to_vec();
                json!({ "term": term.label(), "coef": coef })
            })
            .collect();

        let per_response: Vec<Value> = (0..self.q)
            .map(|r| {
                let terms: Vec<Value> = self
                    .row_support
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| self.per_response_coef[r][*t] != 0.0)
                    .map(|(t, term)| {
                        json!({ "term": term.label(), "coef": self.per_response_coef[r][t] })
                    })
                    .collect();
                json!({
                    "lambda": self.per_response_lambda[r],
                    "intercept": self.per_response_intercept[r],
                    "terms": terms,
                })
            })
            .collect();

        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "config": {
                "lambda": match self.config.lambda {
                    LambdaRule::Cv => json!("cv"),
                    LambdaRule::Fixed(l) => json!(l),
                },
                "folds": self.config.folds,
                "grid_size": self.config.grid_size,
                "threshold": match self.config.threshold {
                    ThresholdRule::Auto => json!("auto"),
                    ThresholdRule::Fixed(t) => json!(t),
                },
                "standardize": self.config.standardize,
                "refit": self.config.refit,
                "tol": self.config.tol,
                "max_sweeps": self.config.max_sweeps,
            },
            "lambda": self.lambda,
            "threshold": self.threshold_used,
            "candidate_terms": self.terms.iter().map(Term::label).collect::<Vec<_>>(),
            "row_support": self.row_support.iter().map(Term::label).collect::<Vec<_>>(),
            "group_coefficients": group_coefficients,
            "group_intercept": self.group_intercept,
            "per_response": per_response,
            "diagnostics": {
                "sweeps": self.diagnostics.sweeps,
                "converged": self.diagnostics.converged,
                "kkt_violation": self.diagnostics.kkt_violation,
                "objective": self.diagnostics.objective,
                "cv_errors": self.diagnostics.cv_errors,
            },
        })
    }
}

/// Run the full selection stage on the screened candidates. Penalty
/// cross-validation draws fold assignments from `rng` (primary stage
/// first, then one per response refit), so a fixed stream reproduces the
/// result exactly. Non-convergence is reported through the diagnostics
/// rather than as an error.
pub fn run_select(
    data: &Dataset,
    sets: &ScreenSets,
    config: &SelectConfig,
    rng: &mut ChaCha12Rng,
) -> Result<SelectResult> {
    validate_config(config, data.n())?;
    let design = build_design(data, sets, config.standardize)?;
    let opts = GlassoOpts {
        tol: config.tol,
        max_sweeps: config.max_sweeps,
        ..GlassoOpts::default()
    };
    if design.d() == 0 {
        return Ok(empty_result(data, config, &design));
    }
    if design.q() == 1 {
        single_response(data, config, &design, &opts, rng)
    } else {
        multi_response(data, config, &design, &opts, rng)
    }
}

fn empty_result(data: &Dataset, config: &SelectConfig, design: &AugmentedDesign) -> SelectResult {
    let q = design.q();
    let n = design.n;
    let rss: f64 = design
        .y
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum();
    SelectResult {
        n,
        p: data.p(),
        q,
        config: config.clone(),
        terms: vec![],
        lambda: 0.0,
        threshold_used: 0.0,
        b_tilde: Array2::zeros((0, q)),
        group_intercept: design.y_center.clone(),
        row_support: vec![],
        per_response_lambda: vec![0.0; q],
        per_response_support: vec![vec![]; q],
        per_response_coef: vec![vec![]; q],
        per_response_intercept: design.y_center.clone(),
        diagnostics: Diagnostics {
            sweeps: 0,
            converged: true,
            kkt_violation: 0.0,
            objective: rss / (2.0 * (n * q) as f64),
            cv_errors: None,
        },
    }
}

fn single_response(
    data: &Dataset,
    config: &SelectConfig,
    design: &AugmentedDesign,
    opts: &GlassoOpts,
    rng: &mut ChaCha12Rng,
) -> Result<SelectResult> {
    let cols = &design.cols;
    let y = &design.y[0];
    let n = design.n;

    let (lambda, cv_errors) = match config.lambda {
        LambdaRule::Fixed(l) => (l, None),
        LambdaRule::Cv => {
            let lam_max = lambda_max(design)?;
            let grid = make_lambda_grid(lam_max, config.grid_size);
            let fold_of = assign_folds(n, config.folds, rng);
            let errors = lasso_cv_errors(cols, y, &grid, &fold_of, config.folds, opts);
            let mut best = 0;
            for (g, &e) in errors.iter().enumerate() {
                if e < errors[best] {
                    best = g;
                }
            }
            (grid[best], Some(errors))
        }
    };

    let core = lasso_core(cols, y, lambda, opts, None);
    let d = design.d();
    let mut b_tilde = Array2::zeros((d, 1));
    let mut intercept = design.y_center[0];
    let mut support_rows = Vec::new();
    for j in 0..d {
        let raw = core.b[j] / design.scale[j];
        b_tilde[[j, 0]] = raw;
        if raw != 0.0 {
            support_rows.push(j);
            intercept -= raw * design.center[j];
        }
    }
    let row_support: Vec<Term> = support_rows.iter().map(|&j| design.terms[j]).collect();
    let coef: Vec<f64> = support_rows.iter().map(|&j| b_tilde[[j, 0]]).collect();

    Ok(SelectResult {
        n,
        p: data.p(),
        q: 1,
        config: config.clone(),
        terms: design.terms.clone(),
        lambda,
        threshold_used: 0.0,
        b_tilde,
        group_intercept: vec![intercept],
        row_support: row_support.clone(),
        per_response_lambda: vec![lambda],
        per_response_support: vec![row_support],
        per_response_coef: vec![coef],
        per_response_intercept: vec![intercept],
        diagnostics: Diagnostics {
            sweeps: core.sweeps,
            converged: core.converged,
            kkt_violation: core.kkt_violation,
            objective: core.objective,
            cv_errors,
        },
    })
}

fn multi_response(
    data: &Dataset,
    config: &SelectConfig,
    design: &AugmentedDesign,
    opts: &GlassoOpts,
    rng: &mut ChaCha12Rng,
) -> Result<SelectResult> {
    let q = design.q();
    let (lambda, cv_errors) = match config.lambda {
        LambdaRule::Fixed(l) => (l, None),
        LambdaRule::Cv => {
            let lam_max = lambda_max(design)?;
            let grid = make_lambda_grid(lam_max, config.grid_size);
            let outcome = select_lambda_cv(design, &grid, config.folds, rng, opts)?;
            (outcome.lambda, Some(outcome.cv_errors))
        }
    };
    let fit = group_lasso_fit(design, lambda, opts)?;
    let cutoff = match config.threshold {
        ThresholdRule::Auto => None,
        ThresholdRule::Fixed(t) => Some(t),
    };
    let rows = threshold_rows(&fit, cutoff);
    let support_rows = rows.row_support;
    let row_support: Vec<Term> = support_rows.iter().map(|&j| design.terms[j]).collect();

    let mut group_intercept = Vec::with_capacity(q);
    for r in 0..q {
        let mut c = design.y_center[r];
        for &j in &support_rows {
            let coef = rows.b_tilde[[j, r]];
            if coef != 0.0 {
                c -= coef * design.center[j];
            }
        }
        group_intercept.push(c);
    }

    let mut converged = fit.converged;
    let mut kkt = fit.kkt_violation;
    let mut per_response_lambda = vec![lambda; q];
    let mut per_response_support = Vec::with_capacity(q);
    let mut per_response_coef = Vec::with_capacity(q);
    let mut per_response_intercept = group_intercept.clone();

    if config.refit {
        for r in 0..q {
            let refit = lasso_refit_response(
                design,
                r,
                &support_rows,
                config.folds,
                config.grid_size,
                rng,
                opts,
            )?;
            converged &= refit.converged;
            kkt = kkt.max(refit.kkt_violation);
            per_response_lambda[r] = refit.lambda;
            per_response_intercept[r] = refit.intercept;
            let support: Vec<Term> = refit
                .coef
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(t, _)| row_support[t])
                .collect();
            per_response_support.push(support);
            per_response_coef.push(refit.coef);
        }
    } else {
        for r in 0..q {
            let mut coef = Vec::with_capacity(support_rows.len());
            let mut support = Vec::new();
            for (t, &j) in support_rows.iter().enumerate() {
                let v = rows.b_tilde[[j, r]];
                coef.push(v);
                if v != 0.0 {
                    support.push(row_support[t]);
                }
            }
            per_response_coef.push(coef);
            per_response_support.push(support);
        }
    }

    Ok(SelectResult {
        n: design.n,
        p: data.p(),
        q,
        config: config.clone(),
        terms: design.terms.clone(),
        lambda,
        threshold_used: rows.threshold_used,
        b_tilde: rows.b_tilde,
        group_intercept,
        row_support,
        per_response_lambda,
        per_response_support,
        per_response_coef,
        per_response_intercept,
        diagnostics: Diagnostics {
            sweeps: fit.sweeps,
            converged,
            kkt_violation: kkt,
            objective: *fit.objective_trace.last().unwrap_or(&0.0),
            cv_errors,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RngStream;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_x(seed: u64, n: usize, p: usize) -> Array2<f64> {
        let mut rng = RngStream::new(seed, 0).rng();
        Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal))
    }

    fn sets(p: usize, q: usize, mains: Vec<usize>, pairs: Vec<(usize, usize)>) -> ScreenSets {
        ScreenSets { p, q, mains, pairs }
    }

    #[test]
    fn single_response_pipeline_recovers_a_noiseless_model() {
        let x = gaussian_x(21, 60, 5);
        let y = Array2::from_shape_fn((60, 1), |(i, _)| {
            1.0 + 2.0 * x[[i, 0]] + 1.5 * x[[i, 0]] * x[[i, 1]]
        });
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(5, 1, vec![0, 2], vec![(0, 1)]);
        let mut rng = RngStream::new(21, 1).rng();
        let result = run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap();

        assert!(result.diagnostics.converged);
        assert_eq!(result.threshold_used, 0.0);
        assert!(result.row_support.contains(&Term::Main(0)));
        assert!(result.row_support.contains(&Term::Inter(0, 1)));
        // Single-response mode mirrors its one fit into the per-response
        // fields verbatim.
        assert_eq!(result.per_response_lambda, vec![result.lambda]);
        assert_eq!(result.per_response_support[0], result.row_support);
        let coef_of = |term: Term| {
            result
                .row_support
                .iter()
                .position(|t| *t == term)
                .map(|t| result.per_response_coef[0][t])
                .unwrap()
        };
        assert!((coef_of(Term::Main(0)) - 2.0).abs() < 0.05);
        assert!((coef_of(Term::Inter(0, 1)) - 1.5).abs() < 0.05);
        assert!((result.per_response_intercept[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn multi_response_pipeline_keeps_shared_rows_and_refits_each_response() {
        let x = gaussian_x(22, 80, 6);
        let y = Array2::from_shape_fn((80, 3), |(i, r)| match r {
            0 => 2.0 * x[[i, 0]] + x[[i, 0]] * x[[i, 1]],
            1 => -1.5 * x[[i, 1]] + 0.5 * x[[i, 0]] * x[[i, 1]],
            _ => x[[i, 0]] - x[[i, 1]],
        });
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(6, 3, vec![0, 1], vec![(0, 1)]);
        let mut rng = RngStream::new(22, 1).rng();
        let result = run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap();

        assert!(result.diagnostics.converged);
        assert_eq!(
            result.row_support,
            vec![Term::Main(0), Term::Main(1), Term::Inter(0, 1)]
        );
        // terms order is mains then pairs, so per-response coefficients
        // align as [M1, M2, M1*M2].
        let c = &result.per_response_coef;
        assert!((c[0][0] - 2.0).abs() < 0.05, "{:?}", c[0]);
        assert!(c[0][1].abs() < 0.05);
        assert!((c[0][2] - 1.0).abs() < 0.05);
        assert!(c[1][0].abs() < 0.05);
        assert!((c[1][1] + 1.5).abs() < 0.05);
        assert!((c[1][2] - 0.5).abs() < 0.05);
        assert!((c[2][0] - 1.0).abs() < 0.05);
        assert!((c[2][1] + 1.0).abs() < 0.05);
        assert!(c[2][2].abs() < 0.05);
        for r in 0..3 {
            assert!(result.per_response_intercept[r].abs() < 0.1);
        }
    }

    #[test]
    fn huge_fixed_penalty_leaves_only_intercepts() {
        let x = gaussian_x(23, 40, 4);
        let y = Array2::from_shape_fn((40, 2), |(i, r)| 3.0 + x[[i, r]] * 0.5);
        let means: Vec<f64> = (0..2).map(|r| y.column(r).mean().unwrap()).collect();
        let data = Dataset::new(x.clone(), y, None, None).unwrap();
        let s = sets(4, 2, vec![0, 1, 2], vec![(0, 1)]);
        let config = SelectConfig {
            lambda: LambdaRule::Fixed(1e9),
            ..SelectConfig::default()
        };
        let mut rng = RngStream::new(23, 1).rng();
        let result = run_select(&data, &s, &config, &mut rng).unwrap();

        assert!(result.row_support.is_empty());
        assert!(result.diagnostics.converged);
        for (r, &mean) in means.iter().enumerate() {
            assert!(result.per_response_support[r].is_empty());
            assert!((result.per_response_intercept[r] - mean).abs() <= 1e-12);
        }
        let preds = result.predict(x.view());
        for i in 0..40 {
            for r in 0..2 {
                assert!((preds[[i, r]] - means[r]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn empty_candidate_set_predicts_the_mean() {
        let x = gaussian_x(24, 30, 3);
        let y = Array2::from_shape_fn((30, 2), |(i, _)| 1.0 + 0.1 * x[[i, 0]]);
        let means: Vec<f64> = (0..2).map(|r| y.column(r).mean().unwrap()).collect();
        let data = Dataset::new(x.clone(), y, None, None).unwrap();
        let s = sets(3, 2, vec![], vec![]);
        let mut rng = RngStream::new(24, 1).rng();
        let result = run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap();

        assert_eq!(result.b_tilde.nrows(), 0);
        assert!(result.terms.is_empty());
        assert!(result.diagnostics.converged);
        let preds = result.predict(x.view());
        for r in 0..2 {
            assert!((preds[[0, r]] - means[r]).abs() <= 1e-12);
        }
    }

    #[test]
    fn prediction_matches_a_hand_computation() {
        let x = gaussian_x(25, 50, 4);
        let y = Array2::from_shape_fn((50, 2), |(i, r)| {
            if r == 0 {
                x[[i, 0]] * 2.0 + x[[i, 2]] * x[[i, 3]]
            } else {
                -x[[i, 0]]
            }
        });
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(4, 2, vec![0], vec![(2, 3)]);
        let mut rng = RngStream::new(25, 1).rng();
        let result = run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap();

        let probe = gaussian_x(26, 7, 4);
        let preds = result.predict(probe.view());
        for i in 0..7 {
            for r in 0..2 {
                let mut want = result.per_response_intercept[r];
                for (t, term) in result.row_support.iter().enumerate() {
                    let v = match term {
                        Term::Main(j) => probe[[i, *j]],
                        Term::Inter(k, l) => probe[[i, *k]] * probe[[i, *l]],
                    };
                    want += result.per_response_coef[r][t] * v;
                }
                assert!((preds[[i, r]] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identical_streams_give_identical_results() {
        let x = gaussian_x(27, 60, 5);
        let y = Array2::from_shape_fn((60, 2), |(i, r)| {
            x[[i, r]] + 0.3 * x[[i, 0]] * x[[i, 1]]
        });
        let data = Dataset::new(x, y.clone(), None, None).unwrap();
        let s = sets(5, 2, vec![0, 1, 2], vec![(0, 1), (1, 2)]);
        let run = || {
            let mut rng = RngStream::new(27, 1).rng();
            run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.b_tilde, b.b_tilde);
        assert_eq!(a.per_response_coef, b.per_response_coef);
        assert_eq!(a.per_response_lambda, b.per_response_lambda);
    }

    #[test]
    fn disabling_refit_reuses_grouped_coefficients() {
        let x = gaussian_x(28, 50, 4);
        let y = Array2::from_shape_fn((50, 2), |(i, r)| {
            1.5 * x[[i, 0]] + if r == 0 { x[[i, 1]] } else { 0.0 }
        });
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(4, 2, vec![0, 1], vec![]);
        let config = SelectConfig {
            refit: false,
            ..SelectConfig::default()
        };
        let mut rng = RngStream::new(28, 1).rng();
        let result = run_select(&data, &s, &config, &mut rng).unwrap();

        let mut support_rows = Vec::new();
        for (j, term) in result.terms.iter().enumerate() {
            if result.row_support.contains(term) {
                support_rows.push(j);
            }
        }
        for r in 0..2 {
            assert_eq!(result.per_response_lambda[r], result.lambda);
            assert_eq!(result.per_response_intercept[r], result.group_intercept[r]);
            for (t, &j) in support_rows.iter().enumerate() {
                assert_eq!(result.per_response_coef[r][t], result.b_tilde[[j, r]]);
            }
        }
    }

    #[test]
    fn config_problems_are_reported_together() {
        let x = gaussian_x(29, 20, 3);
        let y = Array2::from_shape_fn((20, 1), |(i, _)| x[[i, 0]]);
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(3, 1, vec![0], vec![]);
        let config = SelectConfig {
            folds: 1,
            grid_size: 0,
            threshold: ThresholdRule::Fixed(-1.0),
            tol: 0.0,
            ..SelectConfig::default()
        };
        let mut rng = RngStream::new(29, 1).rng();
        let err = run_select(&data, &s, &config, &mut rng).unwrap_err();
        let msg = err.to_string();
        for needle in ["folds", "grid", "threshold", "tol"] {
            assert!(msg.contains(needle), "missing {needle} in: {msg}");
        }
    }

    #[test]
    fn json_report_has_the_expected_shape() {
        let x = gaussian_x(30, 40, 4);
        let y = Array2::from_shape_fn((40, 2), |(i, _)| x[[i, 0]] + x[[i, 1]]);
        let data = Dataset::new(x, y, None, None).unwrap();
        let s = sets(4, 2, vec![0, 1], vec![(0, 1)]);
        let mut rng = RngStream::new(30, 1).rng();
        let result = run_select(&data, &s, &SelectConfig::default(), &mut rng).unwrap();
        let v = result.to_json();

        assert_eq!(v["q"], 2);
        assert_eq!(v["config"]["lambda"], "cv");
        assert_eq!(v["config"]["threshold"], "auto");
        assert_eq!(
            v["candidate_terms"].as_array().unwrap().len(),
            result.terms.len()
        );
        assert_eq!(v["per_response"].as_array().unwrap().len(), 2);
        assert!(v["diagnostics"]["converged"].as_bool().unwrap());
        assert!(v["version"].is_string());
        for entry in v["row_support"].as_array().unwrap() {
            let label = entry.as_str().unwrap();
            assert!(Term::parse_label(label).is_ok());
        }
    }
}
