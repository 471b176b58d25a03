//! Synthetic benchmark data: first-order autoregressive Gaussian
//! covariates, six built-in generating models with interaction structure,
//! and user-defined custom models. Every replicate is reproduced exactly
//! by `(master_seed, replicate)`.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{StandardNormal, StudentT};

use crate::data::{Dataset, GroundTruth, RngStream};
use crate::error::IpdcError;
use crate::Result;

/// One additive piece of a generating equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GenTerm {
    Main(usize),
    Inter(usize, usize),
    /// 1 when the covariate is nonnegative, else 0.
    Indicator(usize),
}

impl GenTerm {
    pub fn eval(&self, row: ArrayView1<'_, f64>) -> f64 {
        match *self {
            GenTerm::Main(j) => row[j],
            GenTerm::Inter(k, l) => row[k] * row[l],
            GenTerm::Indicator(j) => {
                if row[j] >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The generating equation of one response.
#[derive(Debug, Clone)]
pub struct GenEquation {
    pub intercept: f64,
    pub terms: Vec<(f64, GenTerm)>,
}

/// A user-defined generating model: per-response intercepts and
/// coefficient vectors for explicit main and interaction terms.
#[derive(Debug, Clone)]
pub struct CustomModel {
    pub q: usize,
    pub intercept: Vec<f64>,
    /// 0-based covariate index with one coefficient per response.
    pub main: Vec<(usize, Vec<f64>)>,
    pub inter: Vec<((usize, usize), Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    Custom(CustomModel),
}

impl ModelKind {
    pub fn from_id(id: u32) -> Result<ModelKind> {
        match id {
            1 => Ok(ModelKind::M1),
            2 => Ok(ModelKind::M2),
            3 => Ok(ModelKind::M3),
            4 => Ok(ModelKind::M4),
            5 => Ok(ModelKind::M5),
            6 => Ok(ModelKind::M6),
            _ => Err(IpdcError::Config(format!(
                "built-in models are numbered 1 through 6, got {id}"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelKind::M1 => "1".into(),
            ModelKind::M2 => "2".into(),
            ModelKind::M3 => "3".into(),
            ModelKind::M4 => "4".into(),
            ModelKind::M5 => "5".into(),
            ModelKind::M6 => "6".into(),
            ModelKind::Custom(_) => "custom".into(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            ModelKind::M1 | ModelKind::M2 | ModelKind::M3 | ModelKind::M4 => 1,
            ModelKind::M5 => 10,
            ModelKind::M6 => 50,
            ModelKind::Custom(c) => c.q,
        }
    }

    /// Smallest covariate count the generating equations reference.
    pub fn min_p(&self) -> usize {
        match self {
            ModelKind::M1 => 2,
            ModelKind::M2 | ModelKind::M3 => 3,
            ModelKind::M4 => 22,
            ModelKind::M5 => 9,
            ModelKind::M6 => 13,
            ModelKind::Custom(c) => {
                let mut max = 0;
                for (j, _) in &c.main {
                    max = max.max(*j + 1);
                }
                for ((k, l), _) in &c.inter {
                    max = max.max(*k + 1).max(*l + 1);
                }
                max
            }
        }
    }

    /// Active structure shared by every replicate: (main set,
    /// interaction pairs), both 0-based and sorted.
    pub fn structure(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut mains = Vec::new();
        let mut pairs = Vec::new();
        for eq in self.template() {
            for (_, term) in eq {
                match term {
                    GenTerm::Main(j) | GenTerm::Indicator(j) => mains.push(j),
                    GenTerm::Inter(k, l) => pairs.push(if k < l { (k, l) } else { (l, k) }),
                }
            }
        }
        mains.sort_unstable();
        mains.dedup();
        pairs.sort_unstable();
        pairs.dedup();
        (mains, pairs)
    }

    /// Per-response term lists with coefficients either fixed by the
    /// template or redrawn each replicate.
    fn template(&self) -> Vec<Vec<(TemplateCoef, GenTerm)>> {
        use GenTerm::{Indicator, Inter, Main};
        use TemplateCoef::{Drawn, Fixed};
        match self {
            ModelKind::M1 => vec![vec![
                (Fixed(2.0), Main(0)),
                (Fixed(2.0), Main(1)),
                (Fixed(1.0), Inter(0, 1)),
            ]],
            ModelKind::M2 => vec![vec![
                (Fixed(2.0), Main(0)),
                (Fixed(3.0), Inter(0, 1)),
                (Fixed(3.0), Inter(0, 2)),
            ]],
            ModelKind::M3 => vec![vec![
                (Fixed(3.0), Inter(0, 1)),
                (Fixed(3.0), Inter(0, 2)),
            ]],
            ModelKind::M4 => vec![vec![
                (Fixed(3.0), Indicator(11)),
                (Fixed(2.0), Main(21)),
                (Fixed(3.0), Inter(0, 1)),
            ]],
            ModelKind::M5 => {
                let mut eqs = Vec::with_capacity(10);
                for _group in 0..2 {
                    for tail in [Inter(0, 1), Inter(0, 2), Inter(5, 6), Inter(7, 8)] {
                        eqs.push(vec![(Drawn, Main(0)), (Drawn, Main(1)), (Drawn, tail)]);
                    }
                    eqs.push(vec![(Drawn, Inter(5, 6)), (Drawn, Inter(7, 8))]);
                }
                eqs
            }
            ModelKind::M6 => {
                let mut eqs = Vec::with_capacity(50);
                for _group in 0..10 {
                    for tail in [
                        [Inter(0, 1), Inter(2, 3)],
                        [Inter(0, 2), Inter(3, 4)],
                        [Inter(3, 4), Inter(8, 12)],
                        [Inter(8, 11), Inter(11, 12)],
                    ] {
                        let mut eq: Vec<(TemplateCoef, GenTerm)> =
                            (0..4).map(|j| (Drawn, Main(j))).collect();
                        eq.push((Drawn, tail[0]));
                        eq.push((Drawn, tail[1]));
                        eqs.push(eq);
                    }
                    eqs.push(vec![
                        (Drawn, Inter(8, 11)),
                        (Drawn, Inter(8, 12)),
                        (Drawn, Inter(11, 12)),
                    ]);
                }
                eqs
            }
            ModelKind::Custom(c) => {
                let mut eqs = vec![Vec::new(); c.q];
                for (j, coefs) in &c.main {
                    for (r, &coef) in coefs.iter().enumerate() {
                        if coef != 0.0 {
                            eqs[r].push((Fixed(coef), Main(*j)));
                        }
                    }
                }
                for ((k, l), coefs) in &c.inter {
                    let pair = if k < l { Inter(*k, *l) } else { Inter(*l, *k) };
                    for (r, &coef) in coefs.iter().enumerate() {
                        if coef != 0.0 {
                            eqs[r].push((Fixed(coef), pair));
                        }
                    }
                }
                eqs
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let ModelKind::Custom(c) = self {
            let mut problems = Vec::new();
            if c.q == 0 {
                problems.push("custom model needs at least one response".to_string());
            }
            if c.intercept.len() != c.q {
                problems.push(format!(
                    "custom model has {} intercepts for {} responses",
                    c.intercept.len(),
                    c.q
                ));
            }
            let mut seen_main = Vec::new();
            for (j, coefs) in &c.main {
                if coefs.len() != c.q {
                    problems.push(format!(
                        "main term {} has {} coefficients for {} responses",
                        j + 1,
                        coefs.len(),
                        c.q
                    ));
                }
                if seen_main.contains(j) {
                    problems.push(format!("main term {} listed twice", j + 1));
                }
                seen_main.push(*j);
            }
            let mut seen_pairs = Vec::new();
            for ((k, l), coefs) in &c.inter {
                if k == l {
                    problems.push(format!(
                        "interaction ({}, {}) must pair distinct covariates",
                        k + 1,
                        l + 1
                    ));
                }
                if coefs.len() != c.q {
                    problems.push(format!(
                        "interaction ({}, {}) has {} coefficients for {} responses",
                        k + 1,
                        l + 1,
                        coefs.len(),
                        c.q
                    ));
                }
                let norm = if k < l { (*k, *l) } else { (*l, *k) };
                if seen_pairs.contains(&norm) {
                    problems.push(format!(
                        "interaction ({}, {}) listed twice",
                        norm.0 + 1,
                        norm.1 + 1
                    ));
                }
                seen_pairs.push(norm);
            }
            if c.main.is_empty() && c.inter.is_empty() {
                problems.push("custom model has no terms".to_string());
            }
            if !problems.is_empty() {
                return Err(IpdcError::Config(problems.join("; ")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum TemplateCoef {
    Fixed(f64),
    Drawn,
}

/// Additive noise attached to each response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Standard normal.
    GaussianUnit,
    /// Student t with 5 degrees of freedom, unscaled.
    T5,
    /// Noiseless.
    None,
}

impl NoiseKind {
    pub fn parse(s: &str) -> Result<NoiseKind> {
        match s {
            "gaussian" => Ok(NoiseKind::GaussianUnit),
            "t5" => Ok(NoiseKind::T5),
            "none" => Ok(NoiseKind::None),
            other => Err(IpdcError::Config(format!(
                "unknown noise kind \"{other}\" (expected gaussian, t5, or none)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::GaussianUnit => "gaussian",
            NoiseKind::T5 => "t5",
            NoiseKind::None => "none",
        }
    }
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone)]
pub struct SimModelSpec {
    pub model: ModelKind,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub noise: NoiseKind,
    /// Recode every even column (1-based) of the covariates into the three
    /// levels 0/1/2 and center it.
    pub discretize_even: bool,
    pub test_n: usize,
    pub replicates: usize,
    pub master_seed: u64,
}

impl SimModelSpec {
    /// The standard configuration of a scenario: unit Gaussian noise
    /// everywhere except model 6, which uses heavy-tailed noise and
    /// discretized even columns.
    pub fn standard(
        model: ModelKind,
        n: usize,
        p: usize,
        rho: f64,
        replicates: usize,
        master_seed: u64,
    ) -> SimModelSpec {
        let (noise, discretize_even) = match model {
            ModelKind::M6 => (NoiseKind::T5, true),
            _ => (NoiseKind::GaussianUnit, false),
        };
        SimModelSpec {
            model,
            n,
            p,
            rho,
            noise,
            discretize_even,
            test_n: 10_000,
            replicates,
            master_seed,
        }
    }

    pub fn q(&self) -> usize {
        self.model.q()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let mut problems = Vec::new();
        if self.n < 3 {
            problems.push(format!("n must be at least 3, got {}", self.n));
        }
        let min_p = self.model.min_p();
        if self.p < min_p {
            problems.push(format!(
                "model {} references covariate {} so p must be at least {}, got {}",
                self.model.name(),
                min_p,
                min_p,
                self.p
            ));
        }
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            problems.push(format!(
                "rho must lie strictly inside (-1, 1), got {}",
                self.rho
            ));
        }
        if self.replicates == 0 {
            problems.push("replicates must be positive".to_string());
        }
        if self.test_n == 0 {
            problems.push("test_n must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(IpdcError::Config(problems.join("; ")))
        }
    }
}

/// Stationary first-order autoregressive Gaussian rows: each row has
/// covariance rho^|j-k| between columns j and k.
pub fn sample_ar1_gaussian(n: usize, p: usize, rho: f64, rng: &mut ChaCha12Rng) -> Array2<f64> {
    let carry = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        x[[i, 0]] = prev;
        for j in 1..p {
            let z: f64 = rng.sample(StandardNormal);
            prev = rho * prev + carry * z;
            x[[i, j]] = prev;
        }
    }
    x
}

/// Recode every even column (1-based) to 0 (negative), 1 (up to 1.5), or
/// 2 (above 1.5), then center each recoded column at its empirical mean.
pub fn discretize_even_columns(x: &mut Array2<f64>) {
    let n = x.nrows();
    if n == 0 {
        return;
    }
    for j in (1..x.ncols()).step_by(2) {
        let mut col = x.column_mut(j);
        let mut sum = 0.0;
        for v in col.iter_mut() {
            *v = if *v < 0.0 {
                0.0
            } else if *v <= 1.5 {
                1.0
            } else {
                2.0
            };
            sum += *v;
        }
        let mean = sum / n as f64;
        for v in col.iter_mut() {
            *v -= mean;
        }
    }
}

/// Everything one replicate produces: a training dataset, an independent
/// test split from the same mechanism, the generating truth, and the
/// literal per-response equations.
#[derive(Debug, Clone)]
pub struct GeneratedReplicate {
    pub train: Dataset,
    pub test_x: Array2<f64>,
    pub test_y: Array2<f64>,
    pub truth: GroundTruth,
    pub equations: Vec<GenEquation>,
}

/// Generate one replicate from its own reproducible stream.
pub fn gen_model(spec: &SimModelSpec, replicate: usize) -> Result<GeneratedReplicate> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.master_seed, replicate as u64).rng();
    gen_with_rng(spec, &mut rng)
}

/// Generation body on a caller-held stream, so a simulation can keep
/// drawing from the same stream afterwards (e.g. for cross-validation).
/// Draw order: training covariates, coefficients, training noise, test
/// covariates, test noise.
pub(crate) fn gen_with_rng(
    spec: &SimModelSpec,
    rng: &mut ChaCha12Rng,
) -> Result<GeneratedReplicate> {
    let mut x_train = sample_ar1_gaussian(spec.n, spec.p, spec.rho, rng);
    if spec.discretize_even {
        discretize_even_columns(&mut x_train);
    }

    let (equations, truth) = materialize(&spec.model, spec.p, rng)?;

    let mut y_train = evaluate_equations(&equations, &x_train);
    add_noise(&mut y_train, spec.noise, rng);

    let mut x_test = sample_ar1_gaussian(spec.test_n, spec.p, spec.rho, rng);
    if spec.discretize_even {
        discretize_even_columns(&mut x_test);
    }
    let mut y_test = evaluate_equations(&equations, &x_test);
    add_noise(&mut y_test, spec.noise, rng);

    let train = Dataset::new(x_train, y_train, None, None)?;
    Ok(GeneratedReplicate {
        train,
        test_x: x_test,
        test_y: y_test,
        truth,
        equations,
    })
}

/// Instantiate the model template, drawing any per-replicate coefficients
/// as a sign flip times a Uniform(1, 2) magnitude, in template order.
fn materialize(
    model: &ModelKind,
    p: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<GenEquation>, GroundTruth)> {
    let template = model.template();
    let q = template.len();
    let intercepts = match model {
        ModelKind::Custom(c) => c.intercept.clone(),
        _ => vec![0.0; q],
    };

    let (main_set, pairs) = model.structure();
    let mut coef_main = Array2::zeros((p, q));
    let mut coef_inter: BTreeMap<(usize, usize), Vec<f64>> =
        pairs.iter().map(|&pr| (pr, vec![0.0; q])).collect();

    let mut equations = Vec::with_capacity(q);
    for (r, eq) in template.into_iter().enumerate() {
        let mut terms = Vec::with_capacity(eq.len());
        for (coef, term) in eq {
            let value = match coef {
                TemplateCoef::Fixed(v) => v,
                TemplateCoef::Drawn => {
                    let sign = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
                    sign * rng.gen_range(1.0..2.0)
                }
            };
            match term {
                GenTerm::Main(j) | GenTerm::Indicator(j) => coef_main[[j, r]] = value,
                GenTerm::Inter(k, l) => {
                    let key = if k < l { (k, l) } else { (l, k) };
                    coef_inter
                        .get_mut(&key)
                        .expect("structure lists every template pair")[r] = value;
                }
            }
            terms.push((value, term));
        }
        equations.push(GenEquation {
            intercept: intercepts[r],
            terms,
        });
    }
    let truth = GroundTruth::new(main_set, pairs, coef_main, coef_inter, intercepts)?;
    Ok((equations, truth))
}

fn evaluate_equations(equations: &[GenEquation], x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let q = equations.len();
    let mut y = Array2::zeros((n, q));
    for i in 0..n {
        let row = x.row(i);
        for (r, eq) in equations.iter().enumerate() {
            let mut acc = eq.intercept;
            for (coef, term) in &eq.terms {
                acc += coef * term.eval(row);
            }
            y[[i, r]] = acc;
        }
    }
    y
}

/// Add iid noise entry by entry in row-major order.
fn add_noise(y: &mut Array2<f64>, noise: NoiseKind, rng: &mut ChaCha12Rng) {
    match noise {
        NoiseKind::None => {}
        NoiseKind::GaussianUnit => {
            for v in y.iter_mut() {
                let w: f64 = rng.sample(StandardNormal);
                *v += w;
            }
        }
        NoiseKind::T5 => {
            let t = StudentT::new(5.0).expect("valid degrees of freedom");
            for v in y.iter_mut() {
                let w: f64 = rng.sample(t);
                *v += w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(seed: u64) -> ChaCha12Rng {
        RngStream::new(seed, 0).rng()
    }

    #[test]
    fn ar1_rows_are_reproducible_and_shaped() {
        let a = sample_ar1_gaussian(7, 5, 0.4, &mut stream(1));
        let b = sample_ar1_gaussian(7, 5, 0.4, &mut stream(1));
        assert_eq!(a, b);
        assert_eq!(a.dim(), (7, 5));
        let c = sample_ar1_gaussian(7, 5, 0.4, &mut stream(2));
        assert_ne!(a, c);
    }

    #[test]
    fn ar1_adjacent_columns_correlate_near_rho() {
        let rho = 0.6;
        let x = sample_ar1_gaussian(20_000, 4, rho, &mut stream(3));
        for j in 0..3 {
            let a = x.column(j);
            let b = x.column(j + 1);
            let ma = a.mean().unwrap();
            let mb = b.mean().unwrap();
            let mut cov = 0.0;
            let mut va = 0.0;
            let mut vb = 0.0;
            for i in 0..a.len() {
                cov += (a[i] - ma) * (b[i] - mb);
                va += (a[i] - ma).powi(2);
                vb += (b[i] - mb).powi(2);
            }
            let corr = cov / (va * vb).sqrt();
            assert!((corr - rho).abs() < 0.03, "column {j}: corr {corr}");
        }
    }

    #[test]
    fn discretization_hits_the_documented_levels() {
        let mut x = Array2::from_shape_vec(
            (5, 2),
            vec![
                9.0, -0.3, //
                9.0, 0.0, //
                9.0, 1.5, //
                9.0, 1.5000001, //
                9.0, 2.7,
            ],
        )
        .unwrap();
        discretize_even_columns(&mut x);
        // Odd 0-based columns are recoded; column 0 is untouched.
        assert!(x.column(0).iter().all(|&v| v == 9.0));
        let mean = (0.0 + 1.0 + 1.0 + 2.0 + 2.0) / 5.0;
        let want = [0.0, 1.0, 1.0, 2.0, 2.0];
        for (i, &w) in want.iter().enumerate() {
            assert!((x[[i, 1]] - (w - mean)).abs() <= 1e-15);
        }
    }

    type StructureCase = (ModelKind, Vec<usize>, Vec<(usize, usize)>);

    #[test]
    fn builtin_structures_match_their_equations() {
        let cases: Vec<StructureCase> = vec![
            (ModelKind::M1, vec![0, 1], vec![(0, 1)]),
            (ModelKind::M2, vec![0], vec![(0, 1), (0, 2)]),
            (ModelKind::M3, vec![], vec![(0, 1), (0, 2)]),
            (ModelKind::M4, vec![11, 21], vec![(0, 1)]),
            (
                ModelKind::M5,
                vec![0, 1],
                vec![(0, 1), (0, 2), (5, 6), (7, 8)],
            ),
            (
                ModelKind::M6,
                vec![0, 1, 2, 3],
                vec![
                    (0, 1),
                    (0, 2),
                    (2, 3),
                    (3, 4),
                    (8, 11),
                    (8, 12),
                    (11, 12),
                ],
            ),
        ];
        for (model, mains, pairs) in cases {
            let got = model.structure();
            assert_eq!(got.0, mains, "model {}", model.name());
            assert_eq!(got.1, pairs, "model {}", model.name());
        }
        assert_eq!(ModelKind::M5.q(), 10);
        assert_eq!(ModelKind::M6.q(), 50);
    }

    #[test]
    fn drawn_coefficients_lie_in_the_documented_range() {
        let spec = SimModelSpec::standard(ModelKind::M5, 30, 9, 0.5, 1, 77);
        let gen = gen_model(&spec, 0).unwrap();
        let mut seen = 0;
        for eq in &gen.equations {
            for (coef, _) in &eq.terms {
                let mag = coef.abs();
                assert!((1.0..2.0).contains(&mag), "magnitude {mag}");
                seen += 1;
            }
        }
        assert_eq!(seen, 28);
        // Different replicates redraw the coefficients.
        let other = gen_model(&spec, 1).unwrap();
        let flat = |g: &GeneratedReplicate| -> Vec<f64> {
            g.equations
                .iter()
                .flat_map(|e| e.terms.iter().map(|(c, _)| *c))
                .collect()
        };
        assert_ne!(flat(&gen), flat(&other));
        assert_eq!(flat(&gen), flat(&gen_model(&spec, 0).unwrap()));
    }

    #[test]
    fn model_six_draws_twenty_seven_coefficients_per_group() {
        let spec = SimModelSpec {
            test_n: 50,
            ..SimModelSpec::standard(ModelKind::M6, 30, 13, 0.5, 1, 5)
        };
        let gen = gen_model(&spec, 0).unwrap();
        assert_eq!(gen.equations.len(), 50);
        let total: usize = gen.equations.iter().map(|e| e.terms.len()).sum();
        assert_eq!(total, 270);
        assert_eq!(gen.train.q(), 50);
    }

    #[test]
    fn indicator_model_generates_from_the_sign() {
        let spec = SimModelSpec {
            noise: NoiseKind::None,
            ..SimModelSpec::standard(ModelKind::M4, 40, 22, 0.0, 1, 9)
        };
        let gen = gen_model(&spec, 0).unwrap();
        let x = &gen.train.x;
        let y = &gen.train.y;
        for i in 0..gen.train.n() {
            let ind = if x[[i, 11]] >= 0.0 { 1.0 } else { 0.0 };
            let want = 3.0 * ind + 2.0 * x[[i, 21]] + 3.0 * x[[i, 0]] * x[[i, 1]];
            assert!((y[[i, 0]] - want).abs() <= 1e-12);
        }
        assert_eq!(gen.truth.main_set, vec![11, 21]);
        assert_eq!(gen.truth.coef_main[[11, 0]], 3.0);
        assert_eq!(gen.truth.coef_main[[21, 0]], 2.0);
    }

    #[test]
    fn noiseless_custom_model_reproduces_its_equations() {
        let custom = CustomModel {
            q: 2,
            intercept: vec![1.0, -0.5],
            main: vec![(0, vec![2.0, 0.0]), (3, vec![0.0, 1.0])],
            inter: vec![((1, 2), vec![0.5, -1.0])],
        };
        let spec = SimModelSpec {
            noise: NoiseKind::None,
            test_n: 20,
            ..SimModelSpec::standard(ModelKind::Custom(custom), 25, 5, 0.3, 1, 13)
        };
        let gen = gen_model(&spec, 0).unwrap();
        let x = &gen.train.x;
        let y = &gen.train.y;
        for i in 0..25 {
            let w0 = 1.0 + 2.0 * x[[i, 0]] + 0.5 * x[[i, 1]] * x[[i, 2]];
            let w1 = -0.5 + x[[i, 3]] - 1.0 * x[[i, 1]] * x[[i, 2]];
            assert!((y[[i, 0]] - w0).abs() <= 1e-12);
            assert!((y[[i, 1]] - w1).abs() <= 1e-12);
        }
        assert_eq!(gen.truth.main_set, vec![0, 3]);
        assert_eq!(gen.truth.interaction_pairs, vec![(1, 2)]);
    }

    #[test]
    fn heavy_tailed_noise_has_unit_location_but_fatter_tails() {
        let spec = SimModelSpec {
            n: 4000,
            p: 3,
            noise: NoiseKind::T5,
            test_n: 10,
            ..SimModelSpec::standard(ModelKind::M1, 4000, 3, 0.0, 1, 17)
        };
        let gen = gen_model(&spec, 0).unwrap();
        // Residuals are exactly the noise draws in a known model.
        let x = &gen.train.x;
        let mut resid = Vec::with_capacity(4000);
        for i in 0..4000 {
            let signal = 2.0 * x[[i, 0]] + 2.0 * x[[i, 1]] + x[[i, 0]] * x[[i, 1]];
            resid.push(gen.train.y[[i, 0]] - signal);
        }
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / resid.len() as f64;
        // Var of a t with 5 degrees of freedom is 5/3, clearly above 1.
        assert!(var > 1.2, "variance {var}");
    }

    #[test]
    fn invalid_specs_report_every_problem() {
        let spec = SimModelSpec {
            n: 2,
            p: 5,
            rho: 1.0,
            replicates: 0,
            ..SimModelSpec::standard(ModelKind::M4, 2, 5, 1.0, 0, 1)
        };
        let msg = spec.validate().unwrap_err().to_string();
        for needle in ["n must", "p must", "rho", "replicates"] {
            assert!(msg.contains(needle), "missing {needle}: {msg}");
        }
    }
}
