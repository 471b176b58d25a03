//! Marginal screening: rank covariates by distance-correlation utilities and
//! retain candidate main effects and interaction variables.
//!
//! Main effects are ranked by `omega_main` (column vs. scaled response);
//! interaction variables by `omega_inter` (squared column vs. squared
//! response). Candidate pairs are the 2-subsets of the retained interaction
//! variables — or of the union set in union mode, where main and interaction
//! candidates are pooled before pairing. SIS- and DC-SIS-style baselines
//! (single ranking, no square transform) are included for comparisons.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::dcov::{
    column_dcov_terms, dcov2_from_profiles, response_transforms, square_transform,
    DistanceProfile, DEGENERACY_EPS,
};
use crate::error::IpdcError;
use crate::Result;

/// How many features a top-k rule keeps. `Auto` resolves to
/// floor(n / ln n), the usual screening budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KCount {
    Auto,
    Fixed(usize),
}

impl KCount {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            KCount::Auto => {
                let nf = n as f64;
                (nf / nf.ln()).floor() as usize
            }
            KCount::Fixed(k) => *k,
        }
    }
}

/// Retention rule: keep features whose utility clears a threshold, or the
/// k highest-ranked features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectRule {
    Threshold { tau1: f64, tau2: f64 },
    TopK { d_main: KCount, d_inter: KCount },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SisAggregate {
    Max,
    Sum,
}

/// Alternative single-ranking screens run through the same retention rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// The full two-ranking screen (main + squared-transform utilities).
    None,
    /// Absolute Pearson correlation, aggregated across responses.
    Sis2(SisAggregate),
    /// Distance correlation on untransformed variables.
    Dcsis2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenConfig {
    pub rule: SelectRule,
    /// Pool main-effect and interaction candidates into one union set and
    /// build pairs from it (the multi-response protocol).
    pub union_mode: bool,
    pub baseline: Baseline,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            rule: SelectRule::TopK {
                d_main: KCount::Auto,
                d_inter: KCount::Auto,
            },
            union_mode: false,
            baseline: Baseline::None,
        }
    }
}

/// Per-feature utilities plus degeneracy flags, and the response-side
/// distance variances needed to convert utilities into squared distance
/// correlations.
#[derive(Debug, Clone)]
pub struct Utilities {
    pub omega_main: Vec<f64>,
    pub omega_inter: Vec<f64>,
    pub degenerate_main: Vec<bool>,
    pub degenerate_inter: Vec<bool>,
    pub dvar_y_tilde: f64,
    pub dvar_y_star: f64,
}

/// Screening output: utilities, retained sets, and candidate pairs.
/// All indices are 0-based internally; JSON serialization is 1-based.
#[derive(Debug, Clone)]
pub struct ScreenResult {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub config: ScreenConfig,
    /// Ranking utility per feature (omega-hat, |Pearson|, or dcorr,
    /// depending on the baseline).
    pub omega_main: Vec<f64>,
    /// Interaction utility per feature; absent for single-ranking baselines.
    pub omega_inter: Option<Vec<f64>>,
    /// Squared distance correlations matching `omega_main`/`omega_inter`;
    /// absent for the Pearson baseline.
    pub dcorr2_main: Option<Vec<f64>>,
    pub dcorr2_inter: Option<Vec<f64>>,
    pub m_hat: Vec<usize>,
    pub a_hat: Vec<usize>,
    pub i_hat: Vec<(usize, usize)>,
    /// Pooled candidate set; `Some` exactly in union mode.
    pub union_set: Option<Vec<usize>>,
    pub degenerate_main: Vec<usize>,
    pub degenerate_inter: Vec<usize>,
}

/// Compute both marginal utilities for every covariate column.
///
/// Columns are used as given (callers decide about centering). The response
/// profiles are built once and shared across columns; per-column work is a
/// single O(n^2) pass, parallelized over columns with a fixed combination
/// order so results do not depend on the worker count.
pub fn compute_utilities(data: &Dataset) -> Utilities {
    let (y_tilde, y_star) = response_transforms(data.y.view());
    let profile_tilde = DistanceProfile::from_cloud(y_tilde.view());
    let profile_star = DistanceProfile::from_cloud(y_star.view());
    let dvar_y_tilde = dcov2_from_profiles(&profile_tilde, &profile_tilde).dcov2;
    let dvar_y_star = dcov2_from_profiles(&profile_star, &profile_star).dcov2;

    let per_col: Vec<(f64, bool, f64, bool)> = (0..data.p())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = data.x.column(j).to_vec();
            let (main_xy, main_xx) = column_dcov_terms(&col, &profile_tilde);
            let (main_value, main_degenerate) = if main_xx.dcov2 < DEGENERACY_EPS {
                (0.0, true)
            } else {
                (main_xy.dcov2 / main_xx.dcov2.sqrt(), false)
            };
            let squared = square_transform(&col);
            let (inter_xy, inter_xx) = column_dcov_terms(&squared, &profile_star);
            let (inter_value, inter_degenerate) = if inter_xx.dcov2 < DEGENERACY_EPS {
                (0.0, true)
            } else {
                (inter_xy.dcov2 / inter_xx.dcov2.sqrt(), false)
            };
            (main_value, main_degenerate, inter_value, inter_degenerate)
        })
        .collect();

    Utilities {
        omega_main: per_col.iter().map(|t| t.0).collect(),
        degenerate_main: per_col.iter().map(|t| t.1).collect(),
        omega_inter: per_col.iter().map(|t| t.2).collect(),
        degenerate_inter: per_col.iter().map(|t| t.3).collect(),
        dvar_y_tilde,
        dvar_y_star,
    }
}

/// Indices (ascending) of non-degenerate features with utility >= tau.
pub fn select_by_threshold(omegas: &[f64], tau: f64, degenerate: &[bool]) -> Vec<usize> {
    omegas
        .iter()
        .enumerate()
        .filter(|(j, &w)| !degenerate[*j] && w >= tau)
        .map(|(j, _)| j)
        .collect()
}

/// Indices (ascending) of the k largest non-degenerate utilities; ties are
/// broken toward the smaller index. Degenerate features are never selected,
/// even when k exceeds the number of live ones.
pub fn select_top_k(omegas: &[f64], k: usize, degenerate: &[bool]) -> Vec<usize> {
    let mut live: Vec<usize> = (0..omegas.len()).filter(|&j| !degenerate[j]).collect();
    live.sort_by(|&a, &b| omegas[b].total_cmp(&omegas[a]).then(a.cmp(&b)));
    live.truncate(k);
    live.sort_unstable();
    live
}

fn validate_config(config: &ScreenConfig) -> Result<()> {
    let mut problems = Vec::new();
    match config.rule {
        SelectRule::Threshold { tau1, tau2 } => {
            if !tau1.is_finite() || tau1 < 0.0 {
                problems.push(format!("tau1 must be a nonnegative finite number, got {tau1}"));
            }
            if !tau2.is_finite() || tau2 < 0.0 {
                problems.push(format!("tau2 must be a nonnegative finite number, got {tau2}"));
            }
        }
        SelectRule::TopK { d_main, d_inter } => {
            if d_main == KCount::Fixed(0) {
                problems.push("d_main must be positive or auto".into());
            }
            if d_inter == KCount::Fixed(0) {
                problems.push("d_inter must be positive or auto".into());
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(IpdcError::Config(problems.join("; ")))
    }
}

fn all_pairs(set: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(set.len() * set.len().saturating_sub(1) / 2);
    for (i, &k) in set.iter().enumerate() {
        for &l in &set[i + 1..] {
            pairs.push((k, l));
        }
    }
    pairs
}

fn centered_covariates(data: &Dataset) -> Array2<f64> {
    let n = data.n() as f64;
    let mut x = data.x.clone();
    for mut col in x.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
    x
}

/// Absolute Pearson correlations of each column with each response,
/// aggregated across responses. Zero-variance columns (or responses) give
/// zero and are flagged degenerate.
fn sis_utilities(x: &Array2<f64>, y: ArrayView2<'_, f64>, agg: SisAggregate) -> (Vec<f64>, Vec<bool>) {
    let n = x.nrows() as f64;
    let y_stats: Vec<(Vec<f64>, f64)> = (0..y.ncols())
        .map(|r| {
            let col = y.column(r);
            let mean = col.sum() / n;
            let centered: Vec<f64> = col.iter().map(|&v| v - mean).collect();
            let ss = centered.iter().map(|v| v * v).sum::<f64>();
            (centered, ss.sqrt())
        })
        .collect();

    let mut utilities = Vec::with_capacity(x.ncols());
    let mut degenerate = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.sum() / n;
        let centered: Vec<f64> = col.iter().map(|&v| v - mean).collect();
        let sx = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sx <= 0.0 {
            utilities.push(0.0);
            degenerate.push(true);
            continue;
        }
        let mut value: f64 = 0.0;
        let mut any = false;
        for (yc, sy) in &y_stats {
            if *sy <= 0.0 {
                continue;
            }
            any = true;
            let dot: f64 = centered.iter().zip(yc.iter()).map(|(a, b)| a * b).sum();
            let corr = (dot / (sx * sy)).abs();
            value = match agg {
                SisAggregate::Max => value.max(corr),
                SisAggregate::Sum => value + corr,
            };
        }
        utilities.push(value);
        degenerate.push(!any);
    }
    (utilities, degenerate)
}

/// Distance correlation of each column with the untransformed response.
fn dcsis_utilities(x: &Array2<f64>, y: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<bool>) {
    let profile = DistanceProfile::from_cloud(y);
    let dvar_y = dcov2_from_profiles(&profile, &profile).dcov2;
    let per_col: Vec<(f64, bool)> = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = x.column(j).to_vec();
            let (xy, xx) = column_dcov_terms(&col, &profile);
            if xx.dcov2 < DEGENERACY_EPS || dvar_y < DEGENERACY_EPS {
                (0.0, xx.dcov2 < DEGENERACY_EPS)
            } else {
                (
                    xy.dcov2.sqrt() / (xx.dcov2.sqrt() * dvar_y.sqrt()).sqrt(),
                    false,
                )
            }
        })
        .collect();
    (
        per_col.iter().map(|t| t.0).collect(),
        per_col.iter().map(|t| t.1).collect(),
    )
}

fn flag_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(j, _)| j)
        .collect()
}

/// Run the full screening stage on a dataset.
///
/// Covariate columns are empirically centered first; with the square
/// transform downstream this matters, even though the distance covariance
/// itself is translation invariant. The retention rule is applied to the
/// main and interaction rankings (or to the single baseline ranking, sized
/// to the combined budget in union mode, as comparison protocols do).
pub fn run_screen(data: &Dataset, config: &ScreenConfig) -> Result<ScreenResult> {
    validate_config(config)?;
    let n = data.n();
    let x = centered_covariates(data);
    let centered = Dataset {
        x,
        y: data.y.clone(),
        feature_names: data.feature_names.clone(),
        response_names: data.response_names.clone(),
        zero_variance: data.zero_variance.clone(),
    };

    match config.baseline {
        Baseline::None => {
            let utilities = compute_utilities(&centered);
            let (m_hat, a_hat) = match config.rule {
                SelectRule::Threshold { tau1, tau2 } => (
                    select_by_threshold(&utilities.omega_main, tau1, &utilities.degenerate_main),
                    select_by_threshold(&utilities.omega_inter, tau2, &utilities.degenerate_inter),
                ),
                SelectRule::TopK { d_main, d_inter } => (
                    select_top_k(
                        &utilities.omega_main,
                        d_main.resolve(n),
                        &utilities.degenerate_main,
                    ),
                    select_top_k(
                        &utilities.omega_inter,
                        d_inter.resolve(n),
                        &utilities.degenerate_inter,
                    ),
                ),
            };
            let (union_set, i_hat) = if config.union_mode {
                let mut union: Vec<usize> = m_hat.iter().chain(a_hat.iter()).copied().collect();
                union.sort_unstable();
                union.dedup();
                let pairs = all_pairs(&union);
                (Some(union), pairs)
            } else {
                (None, all_pairs(&a_hat))
            };
            let to_dcorr2 = |omegas: &[f64], dvar: f64| -> Vec<f64> {
                if dvar < DEGENERACY_EPS {
                    vec![0.0; omegas.len()]
                } else {
                    omegas.iter().map(|w| w / dvar.sqrt()).collect()
                }
            };
            Ok(ScreenResult {
                n,
                p: data.p(),
                q: data.q(),
                config: *config,
                dcorr2_main: Some(to_dcorr2(&utilities.omega_main, utilities.dvar_y_tilde)),
                dcorr2_inter: Some(to_dcorr2(&utilities.omega_inter, utilities.dvar_y_star)),
                degenerate_main: flag_indices(&utilities.degenerate_main),
                degenerate_inter: flag_indices(&utilities.degenerate_inter),
                omega_main: utilities.omega_main,
                omega_inter: Some(utilities.omega_inter),
                m_hat,
                a_hat,
                i_hat,
                union_set,
            })
        }
        Baseline::Sis2(_) | Baseline::Dcsis2 => {
            let (utilities, degenerate) = match config.baseline {
                Baseline::Sis2(agg) => sis_utilities(&centered.x, centered.y.view(), agg),
                _ => dcsis_utilities(&centered.x, centered.y.view()),
            };
            // Single-ranking methods get one retained set; in union mode it
            // is sized to the combined main + interaction budget so the
            // comparison is budget-matched.
            let retained = match config.rule {
                SelectRule::Threshold { tau1, .. } => {
                    select_by_threshold(&utilities, tau1, &degenerate)
                }
                SelectRule::TopK { d_main, d_inter } => {
                    let k = if config.union_mode {
                        d_main.resolve(n) + d_inter.resolve(n)
                    } else {
                        d_main.resolve(n)
                    };
                    select_top_k(&utilities, k, &degenerate)
                }
            };
            let i_hat = all_pairs(&retained);
            let dcorr2 = match config.baseline {
                Baseline::Dcsis2 => Some(utilities.iter().map(|v| v * v).collect()),
                _ => None,
            };
            Ok(ScreenResult {
                n,
                p: data.p(),
                q: data.q(),
                config: *config,
                omega_main: utilities,
                omega_inter: None,
                dcorr2_main: dcorr2,
                dcorr2_inter: None,
                m_hat: retained.clone(),
                a_hat: retained.clone(),
                i_hat,
                union_set: if config.union_mode {
                    Some(retained)
                } else {
                    None
                },
                degenerate_main: flag_indices(&degenerate),
                degenerate_inter: Vec::new(),
            })
        }
    }
}

impl ScreenResult {
    /// The set whose membership defines "retained" for a main effect (and
    /// for an interaction variable): the union set when present, otherwise
    /// the dedicated set.
    pub fn main_membership(&self) -> &[usize] {
        self.union_set.as_deref().unwrap_or(&self.m_hat)
    }

    pub fn var_membership(&self) -> &[usize] {
        self.union_set.as_deref().unwrap_or(&self.a_hat)
    }

    /// Serialize with 1-based indices and a config echo.
    pub fn to_json(&self) -> Value {
        let one = |v: &[usize]| -> Vec<usize> { v.iter().map(|j| j + 1).collect() };
        let pairs: Vec<[usize; 2]> = self.i_hat.iter().map(|&(k, l)| [k + 1, l + 1]).collect();
        let mut degenerate: Vec<usize> = self
            .degenerate_main
            .iter()
            .chain(self.degenerate_inter.iter())
            .copied()
            .collect();
        degenerate.sort_unstable();
        degenerate.dedup();

        let rule = match self.config.rule {
            SelectRule::Threshold { tau1, tau2 } => json!({
                "rule": "threshold",
                "tau1": tau1,
                "tau2": tau2,
            }),
            SelectRule::TopK { d_main, d_inter } => json!({
                "rule": "top_k",
                "d_main": match d_main { KCount::Auto => json!("auto"), KCount::Fixed(k) => json!(k) },
                "d_inter": match d_inter { KCount::Auto => json!("auto"), KCount::Fixed(k) => json!(k) },
                "k_main": d_main.resolve(self.n),
                "k_inter": d_inter.resolve(self.n),
            }),
        };
        let baseline = match self.config.baseline {
            Baseline::None => json!("none"),
            Baseline::Sis2(SisAggregate::Max) => json!("sis2_max"),
            Baseline::Sis2(SisAggregate::Sum) => json!("sis2_sum"),
            Baseline::Dcsis2 => json!("dcsis2"),
        };

        let mut out = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "config": {
                "rule": rule,
                "union_mode": self.config.union_mode,
                "baseline": baseline,
            },
            "omega_main": self.omega_main,
            "m_hat": one(&self.m_hat),
            "a_hat": one(&self.a_hat),
            "i_hat": pairs,
            "degenerate": one(&degenerate),
        });
        let obj = out.as_object_mut().expect("top-level object");
        if let Some(v) = &self.omega_inter {
            obj.insert("omega_inter".into(), json!(v));
        }
        if let Some(v) = &self.dcorr2_main {
            obj.insert("dcorr2_main".into(), json!(v));
        }
        if let Some(v) = &self.dcorr2_inter {
            obj.insert("dcorr2_inter".into(), json!(v));
        }
        if let Some(u) = &self.union_set {
            obj.insert("union_set".into(), json!(one(u)));
        }
        out
    }
}

/// The retained sets a selection stage needs, decoded from screening JSON
/// (1-based on disk, 0-based here).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreenSets {
    pub p: usize,
    pub q: usize,
    pub mains: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl ScreenSets {
    pub fn from_screen(result: &ScreenResult) -> Self {
        ScreenSets {
            p: result.p,
            q: result.q,
            mains: result.main_membership().to_vec(),
            pairs: result.i_hat.clone(),
        }
    }

    pub fn from_json(value: &Value, path: &str) -> Result<Self> {
        let err = |message: &str| IpdcError::Json {
            path: path.to_string(),
            message: message.to_string(),
        };
        let obj = value.as_object().ok_or_else(|| err("not a JSON object"))?;
        let usize_field = |name: &str| -> Result<usize> {
            obj.get(name)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| err(&format!("missing or invalid field {name:?}")))
        };
        let p = usize_field("p")?;
        let q = usize_field("q")?;
        let index_list = |name: &str| -> Result<Vec<usize>> {
            let raw = obj
                .get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| err(&format!("missing or invalid field {name:?}")))?;
            raw.iter()
                .map(|v| {
                    let j = v
                        .as_u64()
                        .ok_or_else(|| err(&format!("{name:?} holds a non-integer")))?;
                    if j == 0 || j as usize > p {
                        return Err(err(&format!("{name:?} index {j} out of range 1..={p}")));
                    }
                    Ok(j as usize - 1)
                })
                .collect()
        };
        let mains = if obj.contains_key("union_set") {
            index_list("union_set")?
        } else {
            index_list("m_hat")?
        };
        let raw_pairs = obj
            .get("i_hat")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing or invalid field \"i_hat\""))?;
        let mut pairs = Vec::with_capacity(raw_pairs.len());
        for v in raw_pairs {
            let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                err("\"i_hat\" entries must be two-element arrays")
            })?;
            let k = pair[0].as_u64().unwrap_or(0);
            let l = pair[1].as_u64().unwrap_or(0);
            if k == 0 || l == 0 || k as usize > p || l as usize > p || k >= l {
                return Err(err(&format!("invalid interaction pair [{k}, {l}]")));
            }
            pairs.push((k as usize - 1, l as usize - 1));
        }
        Ok(ScreenSets { p, q, mains, pairs })
    }
}
