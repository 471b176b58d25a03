//! The reduced augmented design: retained main-effect columns plus centered
//! products for the candidate pairs, ready for penalized fitting.

use ndarray::ArrayView1;

use crate::data::Dataset;
use crate::error::IpdcError;
use crate::screen::ScreenSets;
use crate::Result;

/// One column of the augmented design, named by what it is rather than
/// where it sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Main(usize),
    Inter(usize, usize),
}

impl Term {
    /// Human/JSON label, 1-based: `M:3` or `I:1:5`.
    pub fn label(&self) -> String {
        match self {
            Term::Main(j) => format!("M:{}", j + 1),
            Term::Inter(k, l) => format!("I:{}:{}", k + 1, l + 1),
        }
    }

    pub fn parse_label(s: &str) -> Result<Term> {
        let bad = || IpdcError::Input(format!("cannot parse term label {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["M", j] => {
                let j: usize = j.parse().map_err(|_| bad())?;
                if j == 0 {
                    return Err(bad());
                }
                Ok(Term::Main(j - 1))
            }
            ["I", k, l] => {
                let k: usize = k.parse().map_err(|_| bad())?;
                let l: usize = l.parse().map_err(|_| bad())?;
                if k == 0 || l == 0 || k >= l {
                    return Err(bad());
                }
                Ok(Term::Inter(k - 1, l - 1))
            }
            _ => Err(bad()),
        }
    }

    /// Raw (uncentered) value of this term on one covariate row.
    pub fn eval_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        match self {
            Term::Main(j) => x[*j],
            Term::Inter(k, l) => x[*k] * x[*l],
        }
    }
}

/// Stored columns below this spread (relative to their mean) are treated as
/// constant: they are zeroed, given unit scale, and flagged.
const CONSTANT_EPS: f64 = 1e-12;

/// Centered (optionally unit-sd) design columns with the transform metadata
/// needed to map coefficients back to raw terms, plus the centered
/// responses. Columns are stored contiguously per term because every solver
/// here walks them column-by-column.
#[derive(Debug, Clone)]
pub struct AugmentedDesign {
    pub terms: Vec<Term>,
    pub cols: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    /// Divisor applied after centering; 1 when unstandardized or constant.
    pub scale: Vec<f64>,
    pub constant_cols: Vec<usize>,
    /// Centered responses, one vector per response.
    pub y: Vec<Vec<f64>>,
    pub y_center: Vec<f64>,
    pub n: usize,
    pub standardized: bool,
}

impl AugmentedDesign {
    pub fn d(&self) -> usize {
        self.terms.len()
    }

    pub fn q(&self) -> usize {
        self.y.len()
    }
}

/// Assemble the augmented design from screening output: one column per
/// retained main effect, then one per candidate pair. Products are formed
/// from the raw covariate columns and centered afterwards (not products of
/// centered columns); all columns and responses are centered, so the fits
/// carry no intercept.
pub fn build_design(
    data: &Dataset,
    sets: &ScreenSets,
    standardize: bool,
) -> Result<AugmentedDesign> {
    if sets.p != data.p() {
        return Err(IpdcError::Shape(format!(
            "screen result was computed for p = {}, data has p = {}",
            sets.p,
            data.p()
        )));
    }
    let n = data.n();
    let nf = n as f64;

    let mut mains = sets.mains.clone();
    mains.sort_unstable();
    mains.dedup();
    let mut pairs = sets.pairs.clone();
    pairs.sort_unstable();
    pairs.dedup();
    for &j in &mains {
        if j >= data.p() {
            return Err(IpdcError::Input(format!(
                "main-effect index {} out of range",
                j + 1
            )));
        }
    }
    for &(k, l) in &pairs {
        if k >= l || l >= data.p() {
            return Err(IpdcError::Input(format!(
                "invalid interaction pair ({}, {})",
                k + 1,
                l + 1
            )));
        }
    }

    let terms: Vec<Term> = mains
        .iter()
        .map(|&j| Term::Main(j))
        .chain(pairs.iter().map(|&(k, l)| Term::Inter(k, l)))
        .collect();

    let mut cols = Vec::with_capacity(terms.len());
    let mut center = Vec::with_capacity(terms.len());
    let mut scale = Vec::with_capacity(terms.len());
    let mut constant_cols = Vec::new();
    for (idx, term) in terms.iter().enumerate() {
        let mut col: Vec<f64> = match term {
            Term::Main(j) => data.x.column(*j).to_vec(),
            Term::Inter(k, l) => {
                let a = data.x.column(*k);
                let b = data.x.column(*l);
                a.iter().zip(b.iter()).map(|(u, v)| u * v).collect()
            }
        };
        let mean = col.iter().sum::<f64>() / nf;
        for v in &mut col {
            *v -= mean;
        }
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
        if sd <= CONSTANT_EPS * (1.0 + mean.abs()) {
            col.iter_mut().for_each(|v| *v = 0.0);
            constant_cols.push(idx);
            center.push(mean);
            scale.push(1.0);
        } else if standardize {
            col.iter_mut().for_each(|v| *v /= sd);
            center.push(mean);
            scale.push(sd);
        } else {
            center.push(mean);
            scale.push(1.0);
        }
        cols.push(col);
    }

    let mut y = Vec::with_capacity(data.q());
    let mut y_center = Vec::with_capacity(data.q());
    for r in 0..data.q() {
        let col = data.y.column(r);
        let mean = col.sum() / nf;
        y.push(col.iter().map(|&v| v - mean).collect());
        y_center.push(mean);
    }

    Ok(AugmentedDesign {
        terms,
        cols,
        center,
        scale,
        constant_cols,
        y,
        y_center,
        n,
        standardized: standardize,
    })
}

/// Smallest penalty at which the group Lasso solution is exactly zero:
/// max_j ||X_j^T Y||_2 / (n q) on the stored (centered/scaled) columns.
pub fn lambda_max(design: &AugmentedDesign) -> Result<f64> {
    if design.d() == 0 {
        return Err(IpdcError::Input(
            "cannot compute a penalty scale for an empty design".into(),
        ));
    }
    let nq = (design.n * design.q()) as f64;
    let mut best: f64 = 0.0;
    for col in &design.cols {
        let mut norm2 = 0.0;
        for resp in &design.y {
            let dot: f64 = col.iter().zip(resp.iter()).map(|(a, b)| a * b).sum();
            norm2 += dot * dot;
        }
        best = best.max(norm2.sqrt() / nq);
    }
    Ok(best)
}
