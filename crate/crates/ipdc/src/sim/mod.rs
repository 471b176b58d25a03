//! Monte-Carlo benchmark harness: generate replicated synthetic datasets,
//! run screening and selection methods on each, and aggregate retention
//! proportions, prediction error, and false positive/negative counts.
//! Replicate `r` derives everything from stream `r` of the master seed, so
//! reports are identical regardless of how many worker threads run.

mod models;

pub use models::{
    discretize_even_columns, gen_model, sample_ar1_gaussian, CustomModel, GenEquation, GenTerm,
    GeneratedReplicate, ModelKind, NoiseKind, SimModelSpec,
};

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{GroundTruth, RngStream};
use crate::error::IpdcError;
use crate::screen::{run_screen, Baseline, ScreenConfig, ScreenResult, ScreenSets, SisAggregate};
use crate::select::{run_select, SelectConfig, SelectResult, Term};
use crate::Result;

use self::models::gen_with_rng;

/// A method under evaluation. The first four stop at screening; the two
/// staged variants screen, fit the grouped penalty, and either keep those
/// coefficients or refit per response; the reference fit regresses each
/// response on its exact generating terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "ipdc")]
    Ipdc,
    #[serde(rename = "sis2_max")]
    Sis2Max,
    #[serde(rename = "sis2_sum")]
    Sis2Sum,
    #[serde(rename = "dcsis2")]
    Dcsis2,
    #[serde(rename = "ipdc_glasso")]
    IpdcGlasso,
    #[serde(rename = "ipdc_glasso_lasso")]
    IpdcGlassoLasso,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "ipdc" => Ok(Method::Ipdc),
            "sis2_max" => Ok(Method::Sis2Max),
            "sis2_sum" => Ok(Method::Sis2Sum),
            "dcsis2" => Ok(Method::Dcsis2),
            "ipdc_glasso" => Ok(Method::IpdcGlasso),
            "ipdc_glasso_lasso" => Ok(Method::IpdcGlassoLasso),
            "oracle" => Ok(Method::Oracle),
            other => Err(IpdcError::Config(format!(
                "unknown method \"{other}\" (expected ipdc, sis2_max, sis2_sum, dcsis2, \
                 ipdc_glasso, ipdc_glasso_lasso, or oracle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ipdc => "ipdc",
            Method::Sis2Max => "sis2_max",
            Method::Sis2Sum => "sis2_sum",
            Method::Dcsis2 => "dcsis2",
            Method::IpdcGlasso => "ipdc_glasso",
            Method::IpdcGlassoLasso => "ipdc_glasso_lasso",
            Method::Oracle => "oracle",
        }
    }

    /// Produces retention flags (runs a screening stage).
    pub fn screens(&self) -> bool {
        !matches!(self, Method::Oracle)
    }

    /// Produces prediction error and false positive/negative counts.
    pub fn selects(&self) -> bool {
        matches!(
            self,
            Method::IpdcGlasso | Method::IpdcGlassoLasso | Method::Oracle
        )
    }
}

/// Whether each truth target survived screening in one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct RetentionOutcome {
    /// One flag per true main effect.
    pub main: Vec<bool>,
    /// One flag per interaction variable that is not also a main effect.
    pub vars: Vec<bool>,
    /// One flag per true interaction pair (both endpoints retained).
    pub pairs: Vec<bool>,
    /// Every main effect and every pair retained at once.
    pub all: bool,
}

/// Test-set prediction error and support errors of a fitted model,
/// with the selected support taken as the union across responses.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SelectionMetrics {
    pub pe: f64,
    pub fp_main: f64,
    pub fp_int: f64,
    pub fn_main: f64,
    pub fn_int: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRecord {
    pub method: Method,
    pub retention: Option<RetentionOutcome>,
    pub selection: Option<SelectionMetrics>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub methods: Vec<MethodRecord>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(samples: &[f64]) -> MeanSe {
    let r = samples.len();
    let mean = samples.iter().sum::<f64>() / r as f64;
    if r < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    MeanSe {
        mean,
        se: (var / r as f64).sqrt(),
    }
}

/// Per-method aggregates over all replicates. Retention entries align with
/// the report's target label lists; `None` marks fields a method does not
/// produce.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub retention_main: Option<Vec<f64>>,
    pub retention_vars: Option<Vec<f64>>,
    pub retention_pairs: Option<Vec<f64>>,
    pub retention_all: Option<f64>,
    pub pe: Option<MeanSe>,
    pub fp_main: Option<MeanSe>,
    pub fp_int: Option<MeanSe>,
    pub fn_main: Option<MeanSe>,
    pub fn_int: Option<MeanSe>,
    pub nonconverged: usize,
}

#[derive(Debug, Clone)]
pub struct SimRunConfig {
    pub methods: Vec<Method>,
    /// Screening settings shared by every method; the baseline field is
    /// overridden per method.
    pub screen: ScreenConfig,
    /// Selection settings for the staged methods; the refit flag is
    /// overridden per method.
    pub select: SelectConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub version: String,
    pub model: String,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub noise: String,
    pub discretize_even: bool,
    pub test_n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub union_mode: bool,
    pub methods: Vec<Method>,
    pub target_mains: Vec<String>,
    pub target_vars: Vec<String>,
    pub target_pairs: Vec<String>,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<ReplicateRecord>,
}

/// Check each truth target against the screened membership sets.
pub fn evaluate_screen(result: &ScreenResult, truth: &GroundTruth) -> RetentionOutcome {
    let main_set = result.main_membership();
    let var_set = result.var_membership();
    let main: Vec<bool> = truth
        .main_set
        .iter()
        .map(|j| main_set.contains(j))
        .collect();
    let vars: Vec<bool> = truth
        .active_vars
        .iter()
        .filter(|j| !truth.main_set.contains(j))
        .map(|j| var_set.contains(j))
        .collect();
    let pairs: Vec<bool> = truth
        .interaction_pairs
        .iter()
        .map(|&(k, l)| var_set.contains(&k) && var_set.contains(&l))
        .collect();
    let all = main.iter().all(|&b| b) && pairs.iter().all(|&b| b);
    RetentionOutcome {
        main,
        vars,
        pairs,
        all,
    }
}

/// Score a fitted selection against the truth on held-out data. The
/// selected support is the union of the per-response supports; prediction
/// error averages squared error over all test rows and responses.
pub fn evaluate_select(
    result: &SelectResult,
    truth: &GroundTruth,
    test_x: &Array2<f64>,
    test_y: &Array2<f64>,
) -> SelectionMetrics {
    let mut sel_mains = Vec::new();
    let mut sel_pairs = Vec::new();
    for support in &result.per_response_support {
        for term in support {
            match term {
                Term::Main(j) => sel_mains.push(*j),
                Term::Inter(k, l) => sel_pairs.push((*k, *l)),
            }
        }
    }
    sel_mains.sort_unstable();
    sel_mains.dedup();
    sel_pairs.sort_unstable();
    sel_pairs.dedup();

    let fp_main = sel_mains
        .iter()
        .filter(|j| !truth.main_set.contains(j))
        .count();
    let fn_main = truth
        .main_set
        .iter()
        .filter(|j| !sel_mains.contains(j))
        .count();
    let fp_int = sel_pairs
        .iter()
        .filter(|pr| !truth.interaction_pairs.contains(pr))
        .count();
    let fn_int = truth
        .interaction_pairs
        .iter()
        .filter(|pr| !sel_pairs.contains(pr))
        .count();

    let preds = result.predict(test_x.view());
    let mut sse = 0.0;
    for (pred, actual) in preds.iter().zip(test_y.iter()) {
        let d = pred - actual;
        sse += d * d;
    }
    let pe = sse / (test_x.nrows() * result.q) as f64;
    SelectionMetrics {
        pe,
        fp_main: fp_main as f64,
        fp_int: fp_int as f64,
        fn_main: fn_main as f64,
        fn_int: fn_int as f64,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solve a symmetric positive-definite system by Cholesky factorization.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let d = b.len();
    for j in 0..d {
        let diag = a[j][j] - dot(&a[j][..j], &a[j][..j]);
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        a[j][j] = ljj;
        for i in (j + 1)..d {
            let v = a[i][j] - dot(&a[i][..j], &a[j][..j]);
            a[i][j] = v / ljj;
        }
    }
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i][k] * b[k];
        }
        b[i] = v / a[i][i];
    }
    for i in (0..d).rev() {
        let mut v = b[i];
        for k in (i + 1)..d {
            v -= a[k][i] * b[k];
        }
        b[i] = v / a[i][i];
    }
    Some(b)
}

/// Least squares per response on the exact generating terms (with
/// intercept), evaluated on the test split. Support errors are zero by
/// construction.
fn oracle_metrics(gen: &GeneratedReplicate) -> Result<SelectionMetrics> {
    let n = gen.train.n();
    let q = gen.train.q();
    let test_n = gen.test_x.nrows();
    let mut sse = 0.0;
    for (r, eq) in gen.equations.iter().enumerate() {
        let terms: Vec<GenTerm> = eq.terms.iter().map(|(_, t)| *t).collect();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(terms.len() + 1);
        cols.push(vec![1.0; n]);
        for t in &terms {
            cols.push((0..n).map(|i| t.eval(gen.train.x.row(i))).collect());
        }
        let y: Vec<f64> = (0..n).map(|i| gen.train.y[[i, r]]).collect();

        let d = cols.len();
        let mut gram = vec![vec![0.0; d]; d];
        let mut rhs = vec![0.0; d];
        for u in 0..d {
            for v in u..d {
                let s = dot(&cols[u], &cols[v]);
                gram[u][v] = s;
                gram[v][u] = s;
            }
            rhs[u] = dot(&cols[u], &y);
        }
        let beta = solve_spd(gram, rhs).ok_or_else(|| {
            IpdcError::NonConvergence(
                "singular normal equations in the reference least-squares fit".into(),
            )
        })?;

        for i in 0..test_n {
            let row = gen.test_x.row(i);
            let mut pred = beta[0];
            for (t, term) in terms.iter().enumerate() {
                pred += beta[t + 1] * term.eval(row);
            }
            let diff = pred - gen.test_y[[i, r]];
            sse += diff * diff;
        }
    }
    Ok(SelectionMetrics {
        pe: sse / (test_n * q) as f64,
        fp_main: 0.0,
        fp_int: 0.0,
        fn_main: 0.0,
        fn_int: 0.0,
    })
}

fn run_replicate(spec: &SimModelSpec, run: &SimRunConfig, rep: usize) -> Result<ReplicateRecord> {
    let mut rng = RngStream::new(spec.master_seed, rep as u64).rng();
    let gen = gen_with_rng(spec, &mut rng)?;
    // Every selection method continues the replicate stream from the same
    // post-generation state, so results do not depend on which other
    // methods were requested alongside it.
    let post_gen = rng;

    let needs_ipdc = run.methods.iter().any(|m| {
        matches!(
            m,
            Method::Ipdc | Method::IpdcGlasso | Method::IpdcGlassoLasso
        )
    });
    let ipdc_screen: Option<ScreenResult> = if needs_ipdc {
        let config = ScreenConfig {
            baseline: Baseline::None,
            ..run.screen
        };
        Some(run_screen(&gen.train, &config)?)
    } else {
        None
    };

    let mut methods = Vec::with_capacity(run.methods.len());
    for &method in &run.methods {
        let record = match method {
            Method::Ipdc => {
                let screen = ipdc_screen.as_ref().expect("screen cached for ipdc");
                MethodRecord {
                    method,
                    retention: Some(evaluate_screen(screen, &gen.truth)),
                    selection: None,
                    converged: true,
                }
            }
            Method::Sis2Max | Method::Sis2Sum | Method::Dcsis2 => {
                let baseline = match method {
                    Method::Sis2Max => Baseline::Sis2(SisAggregate::Max),
                    Method::Sis2Sum => Baseline::Sis2(SisAggregate::Sum),
                    _ => Baseline::Dcsis2,
                };
                let config = ScreenConfig {
                    baseline,
                    ..run.screen
                };
                let screen = run_screen(&gen.train, &config)?;
                MethodRecord {
                    method,
                    retention: Some(evaluate_screen(&screen, &gen.truth)),
                    selection: None,
                    converged: true,
                }
            }
            Method::IpdcGlasso | Method::IpdcGlassoLasso => {
                let screen = ipdc_screen.as_ref().expect("screen cached for ipdc");
                let sets = ScreenSets::from_screen(screen);
                let select_config = SelectConfig {
                    refit: matches!(method, Method::IpdcGlassoLasso),
                    ..run.select.clone()
                };
                let mut method_rng = post_gen.clone();
                let result = run_select(&gen.train, &sets, &select_config, &mut method_rng)?;
                let metrics = evaluate_select(&result, &gen.truth, &gen.test_x, &gen.test_y);
                MethodRecord {
                    method,
                    retention: Some(evaluate_screen(screen, &gen.truth)),
                    selection: Some(metrics),
                    converged: result.diagnostics.converged,
                }
            }
            Method::Oracle => MethodRecord {
                method,
                retention: None,
                selection: Some(oracle_metrics(&gen)?),
                converged: true,
            },
        };
        methods.push(record);
    }
    Ok(ReplicateRecord {
        replicate: rep,
        methods,
    })
}

/// Run every requested method on every replicate (replicates in parallel)
/// and aggregate. Fails fast on configuration problems; a replicate error
/// aborts the whole run.
pub fn run_monte_carlo(spec: &SimModelSpec, run: &SimRunConfig) -> Result<SimReport> {
    spec.validate()?;
    if run.methods.is_empty() {
        return Err(IpdcError::Config("no methods requested".into()));
    }
    for (i, m) in run.methods.iter().enumerate() {
        if run.methods[..i].contains(m) {
            return Err(IpdcError::Config(format!(
                "method {} requested more than once",
                m.name()
            )));
        }
    }

    let records: Vec<ReplicateRecord> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| run_replicate(spec, run, rep))
        .collect::<Result<Vec<_>>>()?;

    let (truth_mains, truth_pairs) = spec.model.structure();
    let mut endpoints: Vec<usize> = truth_pairs.iter().flat_map(|&(k, l)| [k, l]).collect();
    endpoints.sort_unstable();
    endpoints.dedup();
    let extra_vars: Vec<usize> = endpoints
        .into_iter()
        .filter(|j| !truth_mains.contains(j))
        .collect();

    let target_mains: Vec<String> = truth_mains.iter().map(|j| format!("X{}", j + 1)).collect();
    let target_vars: Vec<String> = extra_vars.iter().map(|j| format!("X{}", j + 1)).collect();
    let target_pairs: Vec<String> = truth_pairs
        .iter()
        .map(|(k, l)| format!("X{}X{}", k + 1, l + 1))
        .collect();

    let mut summaries = Vec::with_capacity(run.methods.len());
    for (mi, &method) in run.methods.iter().enumerate() {
        let total = records.len() as f64;
        let mut summary = MethodSummary {
            method,
            retention_main: None,
            retention_vars: None,
            retention_pairs: None,
            retention_all: None,
            pe: None,
            fp_main: None,
            fp_int: None,
            fn_main: None,
            fn_int: None,
            nonconverged: records
                .iter()
                .filter(|rec| !rec.methods[mi].converged)
                .count(),
        };
        if method.screens() {
            let mut main_acc = vec![0.0; target_mains.len()];
            let mut vars_acc = vec![0.0; target_vars.len()];
            let mut pairs_acc = vec![0.0; target_pairs.len()];
            let mut all_acc = 0.0;
            for rec in &records {
                let outcome = rec.methods[mi]
                    .retention
                    .as_ref()
                    .expect("screening method has retention flags");
                for (acc, &b) in main_acc.iter_mut().zip(&outcome.main) {
                    *acc += f64::from(u8::from(b));
                }
                for (acc, &b) in vars_acc.iter_mut().zip(&outcome.vars) {
                    *acc += f64::from(u8::from(b));
                }
                for (acc, &b) in pairs_acc.iter_mut().zip(&outcome.pairs) {
                    *acc += f64::from(u8::from(b));
                }
                if outcome.all {
                    all_acc += 1.0;
                }
            }
            summary.retention_main = Some(main_acc.iter().map(|s| s / total).collect());
            summary.retention_vars = Some(vars_acc.iter().map(|s| s / total).collect());
            summary.retention_pairs = Some(pairs_acc.iter().map(|s| s / total).collect());
            summary.retention_all = Some(all_acc / total);
        }
        if method.selects() {
            let gather = |pick: fn(&SelectionMetrics) -> f64| -> MeanSe {
                let samples: Vec<f64> = records
                    .iter()
                    .map(|rec| {
                        pick(rec.methods[mi]
                            .selection
                            .as_ref()
                            .expect("selection method has metrics"))
                    })
                    .collect();
                mean_se(&samples)
            };
            summary.pe = Some(gather(|m| m.pe));
            summary.fp_main = Some(gather(|m| m.fp_main));
            summary.fp_int = Some(gather(|m| m.fp_int));
            summary.fn_main = Some(gather(|m| m.fn_main));
            summary.fn_int = Some(gather(|m| m.fn_int));
        }
        summaries.push(summary);
    }

    Ok(SimReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        model: spec.model.name(),
        n: spec.n,
        p: spec.p,
        q: spec.q(),
        rho: spec.rho,
        noise: spec.noise.name().to_string(),
        discretize_even: spec.discretize_even,
        test_n: spec.test_n,
        replicates: spec.replicates,
        master_seed: spec.master_seed,
        union_mode: run.screen.union_mode,
        methods: run.methods.clone(),
        target_mains,
        target_vars,
        target_pairs,
        summaries,
        records,
    })
}

/// Render the per-method aggregates as one CSV table: retention columns
/// per target plus "All", then mean/standard-error pairs for prediction
/// error and the support error counts. Cells a method does not produce are
/// left empty. Numbers print in shortest round-trip form.
pub fn report_table(report: &SimReport) -> String {
    let mut header: Vec<String> = vec!["method".into()];
    header.extend(report.target_mains.iter().cloned());
    header.extend(report.target_vars.iter().cloned());
    header.extend(report.target_pairs.iter().cloned());
    header.push("All".into());
    for base in ["PE", "FP_main", "FP_int", "FN_main", "FN_int"] {
        header.push(base.into());
        header.push(format!("{base}_se"));
    }
    header.push("nonconverged".into());

    let mut out = header.join(",");
    out.push('\n');
    for s in &report.summaries {
        let mut row: Vec<String> = vec![s.method.name().into()];
        for (values, len) in [
            (&s.retention_main, report.target_mains.len()),
            (&s.retention_vars, report.target_vars.len()),
            (&s.retention_pairs, report.target_pairs.len()),
        ] {
            match values {
                Some(vals) => row.extend(vals.iter().map(|v| format!("{v}"))),
                None => row.extend(std::iter::repeat_n(String::new(), len)),
            }
        }
        row.push(s.retention_all.map_or(String::new(), |v| format!("{v}")));
        for stat in [&s.pe, &s.fp_main, &s.fp_int, &s.fn_main, &s.fn_int] {
            match stat {
                Some(ms) => {
                    row.push(format!("{}", ms.mean));
                    row.push(format!("{}", ms.se));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        row.push(format!("{}", s.nonconverged));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screen::{KCount, SelectRule};
    use crate::select::Diagnostics;
    use ndarray::array;
    use std::collections::BTreeMap;

    #[test]
    fn method_names_roundtrip() {
        let all = [
            Method::Ipdc,
            Method::Sis2Max,
            Method::Sis2Sum,
            Method::Dcsis2,
            Method::IpdcGlasso,
            Method::IpdcGlassoLasso,
            Method::Oracle,
        ];
        for m in all {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("nope").is_err());
        // Serialization uses the same names as parsing.
        assert_eq!(
            serde_json::to_value(Method::IpdcGlassoLasso).unwrap(),
            serde_json::json!("ipdc_glasso_lasso")
        );
    }

    fn truth_with(mains: Vec<usize>, pairs: Vec<(usize, usize)>, p: usize) -> GroundTruth {
        let coef_inter: BTreeMap<(usize, usize), Vec<f64>> =
            pairs.iter().map(|&pr| (pr, vec![1.0])).collect();
        GroundTruth::new(
            mains,
            pairs,
            Array2::zeros((p, 1)),
            coef_inter,
            vec![0.0],
        )
        .unwrap()
    }

    fn screen_result_with(
        m_hat: Vec<usize>,
        a_hat: Vec<usize>,
        union_set: Option<Vec<usize>>,
        p: usize,
    ) -> ScreenResult {
        ScreenResult {
            n: 10,
            p,
            q: 1,
            config: ScreenConfig::default(),
            omega_main: vec![0.0; p],
            omega_inter: None,
            dcorr2_main: None,
            dcorr2_inter: None,
            m_hat,
            a_hat,
            i_hat: vec![],
            union_set,
            degenerate_main: vec![],
            degenerate_inter: vec![],
        }
    }

    #[test]
    fn retention_uses_the_right_membership_sets() {
        let truth = truth_with(vec![0], vec![(1, 2)], 6);
        // Separate sets: mains checked against m_hat, pairs against a_hat.
        let hit = screen_result_with(vec![0, 5], vec![1, 2], None, 6);
        let outcome = evaluate_screen(&hit, &truth);
        assert_eq!(outcome.main, vec![true]);
        assert_eq!(outcome.vars, vec![true, true]);
        assert_eq!(outcome.pairs, vec![true]);
        assert!(outcome.all);

        let partial = screen_result_with(vec![0], vec![1], None, 6);
        let outcome = evaluate_screen(&partial, &truth);
        assert_eq!(outcome.pairs, vec![false]);
        assert_eq!(outcome.vars, vec![true, false]);
        assert!(!outcome.all);

        // A pooled set replaces both memberships.
        let pooled = screen_result_with(vec![], vec![], Some(vec![0, 1]), 6);
        let outcome = evaluate_screen(&pooled, &truth);
        assert_eq!(outcome.main, vec![true]);
        assert_eq!(outcome.pairs, vec![false]);
        assert!(!outcome.all);
    }

    #[test]
    fn selection_metrics_count_support_errors_and_error() {
        let truth = truth_with(vec![0], vec![(1, 2)], 4);
        let result = SelectResult {
            n: 10,
            p: 4,
            q: 1,
            config: SelectConfig::default(),
            terms: vec![Term::Main(0), Term::Inter(0, 1)],
            lambda: 0.1,
            threshold_used: 0.0,
            b_tilde: Array2::zeros((2, 1)),
            group_intercept: vec![0.0],
            row_support: vec![Term::Main(0), Term::Inter(0, 1)],
            per_response_lambda: vec![0.1],
            per_response_support: vec![vec![Term::Main(0), Term::Inter(0, 1)]],
            per_response_coef: vec![vec![2.0, 1.0]],
            per_response_intercept: vec![0.0],
            diagnostics: Diagnostics {
                sweeps: 1,
                converged: true,
                kkt_violation: 0.0,
                objective: 0.0,
                cv_errors: None,
            },
        };
        let test_x = array![[1.0, 2.0, 3.0, 4.0]];
        let test_y = array![[5.0]];
        let metrics = evaluate_select(&result, &truth, &test_x, &test_y);
        // Predicted 2*1 + 1*(1*2) = 4 against 5.
        assert!((metrics.pe - 1.0).abs() <= 1e-12);
        assert_eq!(metrics.fp_main, 0.0);
        assert_eq!(metrics.fn_main, 0.0);
        // Selected pair (1,2) in 1-based terms is (0,1) here: truth pair
        // (1,2) was missed and (0,1) is spurious.
        assert_eq!(metrics.fp_int, 1.0);
        assert_eq!(metrics.fn_int, 1.0);
    }

    #[test]
    fn spd_solver_matches_a_hand_inverse() {
        // A = [[4,2],[2,3]], b = [10, 9]: solution (1.5, 2).
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = solve_spd(a, vec![10.0, 9.0]).unwrap();
        assert!((x[0] - 1.5).abs() <= 1e-12);
        assert!((x[1] - 2.0).abs() <= 1e-12);
        // Singular matrix is rejected.
        let s = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(solve_spd(s, vec![1.0, 1.0]).is_none());
    }

    fn quick_run(methods: Vec<Method>, replicates: usize, seed: u64) -> SimReport {
        let spec = SimModelSpec {
            test_n: 400,
            ..SimModelSpec::standard(ModelKind::M1, 60, 10, 0.0, replicates, seed)
        };
        let run = SimRunConfig {
            methods,
            screen: ScreenConfig {
                rule: SelectRule::TopK {
                    d_main: KCount::Fixed(5),
                    d_inter: KCount::Fixed(5),
                },
                ..ScreenConfig::default()
            },
            select: SelectConfig {
                grid_size: 25,
                ..SelectConfig::default()
            },
        };
        run_monte_carlo(&spec, &run).unwrap()
    }

    #[test]
    fn small_monte_carlo_produces_a_consistent_report() {
        let report = quick_run(
            vec![
                Method::Ipdc,
                Method::Sis2Max,
                Method::IpdcGlassoLasso,
                Method::Oracle,
            ],
            2,
            101,
        );
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.summaries.len(), 4);
        assert_eq!(report.target_mains, vec!["X1", "X2"]);
        // Both interaction endpoints are also mains, so no extra targets.
        assert!(report.target_vars.is_empty());
        assert_eq!(report.target_pairs, vec!["X1X2"]);

        let ipdc = &report.summaries[0];
        assert_eq!(ipdc.retention_main.as_ref().unwrap().len(), 2);
        assert!(ipdc.pe.is_none());

        let oracle = &report.summaries[3];
        assert!(oracle.retention_main.is_none());
        let pe = oracle.pe.unwrap();
        // Noise is unit variance, so the reference fit sits near 1.
        assert!((0.7..1.5).contains(&pe.mean), "oracle pe {}", pe.mean);
        assert_eq!(oracle.fp_main.unwrap().mean, 0.0);
        assert_eq!(oracle.fn_int.unwrap().mean, 0.0);

        // Strong signal at n=60 with only ten covariates: the staged fit
        // should also be scoring sanely.
        let staged = &report.summaries[2];
        assert!(staged.pe.unwrap().mean < 10.0);
        assert!(staged.retention_main.is_some());
    }

    #[test]
    fn reports_are_reproducible() {
        let a = quick_run(vec![Method::Ipdc, Method::IpdcGlasso], 2, 55);
        let b = quick_run(vec![Method::Ipdc, Method::IpdcGlasso], 2, 55);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(report_table(&a), report_table(&b));
    }

    #[test]
    fn selection_is_unaffected_by_companion_methods() {
        // The staged method draws from a clone of the post-generation
        // stream, so adding other methods to the run must not change it.
        let alone = quick_run(vec![Method::IpdcGlassoLasso], 2, 77);
        let crowd = quick_run(
            vec![
                Method::Sis2Sum,
                Method::IpdcGlasso,
                Method::IpdcGlassoLasso,
                Method::Oracle,
            ],
            2,
            77,
        );
        let pick = |r: &SimReport| -> Vec<String> {
            r.summaries
                .iter()
                .filter(|s| s.method == Method::IpdcGlassoLasso)
                .map(|s| serde_json::to_string(&s.pe).unwrap())
                .collect()
        };
        assert_eq!(pick(&alone), pick(&crowd));
    }

    #[test]
    fn single_replicate_reports_zero_standard_errors() {
        let report = quick_run(vec![Method::Oracle], 1, 7);
        let pe = report.summaries[0].pe.unwrap();
        assert_eq!(pe.se, 0.0);
        assert!(pe.mean.is_finite());
    }

    #[test]
    fn table_rows_match_the_header_width() {
        let report = quick_run(vec![Method::Ipdc, Method::Oracle], 1, 3);
        let table = report_table(&report);
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        let width = header.split(',').count();
        assert!(header.starts_with("method,X1,X2,X1X2,All,PE,PE_se,"));
        let mut rows = 0;
        for line in lines {
            assert_eq!(line.split(',').count(), width, "row: {line}");
            rows += 1;
        }
        assert_eq!(rows, 2);
        // The reference fit leaves every retention cell blank.
        let oracle_line = table
            .lines()
            .find(|l| l.starts_with("oracle,"))
            .unwrap();
        assert!(oracle_line.starts_with("oracle,,,,,"));
    }

    #[test]
    fn duplicate_methods_are_rejected() {
        let spec = SimModelSpec::standard(ModelKind::M1, 30, 5, 0.0, 1, 1);
        let run = SimRunConfig {
            methods: vec![Method::Ipdc, Method::Ipdc],
            screen: ScreenConfig::default(),
            select: SelectConfig::default(),
        };
        let err = run_monte_carlo(&spec, &run).unwrap_err();
        assert!(err.to_string().contains("more than once"));
    }
}
