//! Sample distance covariance and the marginal utilities built on it.
//!
//! Everything here works with the biased plug-in V-statistic. For clouds
//! u (n x d_u) and v (n x d_v) with pairwise Euclidean distances
//! a_ij = |u_i - u_j| and b_ij = |v_i - v_j|:
//!
//!   S1 = n^-2 * sum_ij a_ij * b_ij
//!   S2 = (n^-2 * sum_ij a_ij) * (n^-2 * sum_ij b_ij)
//!   S3 = n^-3 * sum_ijk a_ik * b_jk
//!   dcov^2 = S1 + S2 - 2*S3
//!
//! S3 factors through the distance-row sums, so the fast path is O(n^2) per
//! pair after the distance matrices are built. `sample_dcov2_oracle` keeps
//! the literal triple sum for cross-checking the regrouped arithmetic.

use ndarray::ArrayView2;

use crate::data::MIN_ROWS;
use crate::error::IpdcError;
use crate::Result;

/// Distance variances below this are treated as degenerate (constant
/// feature): the corresponding utility and correlation are defined as 0.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// The three raw sums of the V-statistic plus the (clamped) squared
/// distance covariance they combine into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcovTerms {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub dcov2: f64,
}

impl DcovTerms {
    fn combine(s1: f64, s2: f64, s3: f64) -> Self {
        // Rounding can push the mathematically nonnegative combination a few
        // ulps below zero; clamp so downstream square roots stay defined.
        let dcov2 = (s1 + s2 - 2.0 * s3).max(0.0);
        DcovTerms { s1, s2, s3, dcov2 }
    }
}

/// Pairwise distance structure of one sample cloud: the dense distance
/// matrix with its row sums and grand total. Building this once per cloud
/// and reusing it across many pairings is what keeps screening O(n^2) per
/// feature.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    n: usize,
    dist: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
}

impl DistanceProfile {
    pub fn from_cloud(points: ArrayView2<'_, f64>) -> Self {
        let n = points.nrows();
        let mut dist = vec![0.0; n * n];
        let mut row_sums = vec![0.0; n];
        for i in 0..n {
            let pi = points.row(i);
            for j in (i + 1)..n {
                let pj = points.row(j);
                let d = pi
                    .iter()
                    .zip(pj.iter())
                    .map(|(a, b)| {
                        let diff = a - b;
                        diff * diff
                    })
                    .sum::<f64>()
                    .sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
                row_sums[i] += d;
                row_sums[j] += d;
            }
        }
        let total = row_sums.iter().sum();
        DistanceProfile {
            n,
            dist,
            row_sums,
            total,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// V-statistic terms for a pair of pre-built profiles.
pub fn dcov2_from_profiles(a: &DistanceProfile, b: &DistanceProfile) -> DcovTerms {
    debug_assert_eq!(a.n, b.n);
    let n = a.n as f64;
    let n2 = n * n;
    let s1 = a
        .dist
        .iter()
        .zip(b.dist.iter())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        / n2;
    let s2 = (a.total / n2) * (b.total / n2);
    let s3 = a
        .row_sums
        .iter()
        .zip(b.row_sums.iter())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        / (n2 * n);
    DcovTerms::combine(s1, s2, s3)
}

fn check_pair(u: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>, min_rows: usize) -> Result<()> {
    if u.nrows() != v.nrows() {
        return Err(IpdcError::Shape(format!(
            "clouds have {} and {} rows",
            u.nrows(),
            v.nrows()
        )));
    }
    if u.nrows() < min_rows {
        return Err(IpdcError::TooFewRows {
            n: u.nrows(),
            min: min_rows,
        });
    }
    Ok(())
}

/// Squared sample distance covariance between two clouds, O(n^2) after the
/// distance matrices are formed.
pub fn sample_dcov2(u: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Result<DcovTerms> {
    check_pair(u, v, MIN_ROWS)?;
    let pu = DistanceProfile::from_cloud(u);
    let pv = DistanceProfile::from_cloud(v);
    Ok(dcov2_from_profiles(&pu, &pv))
}

/// Literal O(n^3) evaluation of the same three sums, with no regrouping of
/// the triple sum. Exists so tests can certify the fast path against an
/// independent computation; n = 2 is allowed here for hand-checkable cases.
pub fn sample_dcov2_oracle(u: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Result<DcovTerms> {
    check_pair(u, v, 2)?;
    let n = u.nrows();
    let nf = n as f64;
    let du = |i: usize, j: usize| -> f64 {
        u.row(i)
            .iter()
            .zip(u.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let dv = |i: usize, j: usize| -> f64 {
        v.row(i)
            .iter()
            .zip(v.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let mut s1 = 0.0;
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for i in 0..n {
        for j in 0..n {
            s1 += du(i, j) * dv(i, j);
            sum_a += du(i, j);
            sum_b += dv(i, j);
        }
    }
    let mut s3 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                s3 += du(i, k) * dv(j, k);
            }
        }
    }
    let n2 = nf * nf;
    Ok(DcovTerms::combine(
        s1 / n2,
        (sum_a / n2) * (sum_b / n2),
        s3 / (n2 * nf),
    ))
}

/// Sample distance correlation in [0, 1]; defined as 0 whenever either
/// marginal distance variance is below `DEGENERACY_EPS`.
pub fn sample_dcorr(u: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Result<f64> {
    check_pair(u, v, MIN_ROWS)?;
    let pu = DistanceProfile::from_cloud(u);
    let pv = DistanceProfile::from_cloud(v);
    let vu = dcov2_from_profiles(&pu, &pu).dcov2;
    let vv = dcov2_from_profiles(&pv, &pv).dcov2;
    if vu < DEGENERACY_EPS || vv < DEGENERACY_EPS {
        return Ok(0.0);
    }
    let uv = dcov2_from_profiles(&pu, &pv).dcov2;
    Ok(uv.sqrt() / (vu.sqrt() * vv.sqrt()).sqrt())
}

/// Elementwise square of a covariate column: the transform that turns an
/// interaction variable into something marginally visible.
pub fn square_transform(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

/// The two response transforms used by the marginal utilities:
/// `y_tilde = y / sqrt(q)` for main effects and `y_star = (y . y) / q`
/// (elementwise square, scaled) for interactions.
pub fn response_transforms(y: ArrayView2<'_, f64>) -> (ndarray::Array2<f64>, ndarray::Array2<f64>) {
    let q = y.ncols() as f64;
    let y_tilde = y.mapv(|v| v / q.sqrt());
    let y_star = y.mapv(|v| v * v / q);
    (y_tilde, y_star)
}

/// One streaming pass over the pairs of a scalar column against a prepared
/// response profile. Returns the (column, response) terms and the column's
/// own (column, column) terms, which the utilities need as numerator and
/// denominator. Summation order is fixed, so results are identical no
/// matter how callers parallelize across columns.
pub fn column_dcov_terms(x: &[f64], profile: &DistanceProfile) -> (DcovTerms, DcovTerms) {
    let n = x.len();
    debug_assert_eq!(n, profile.n);
    let mut arow = vec![0.0; n];
    let mut s1_xy = 0.0;
    let mut s1_xx = 0.0;
    for i in 0..n {
        let xi = x[i];
        let row = &profile.dist[i * n..(i + 1) * n];
        for j in (i + 1)..n {
            let a = (xi - x[j]).abs();
            s1_xy += a * row[j];
            s1_xx += a * a;
            arow[i] += a;
            arow[j] += a;
        }
    }
    let nf = n as f64;
    let n2 = nf * nf;
    let atot: f64 = arow.iter().sum();

    let s3_xy = arow
        .iter()
        .zip(profile.row_sums.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / (n2 * nf);
    let s3_xx = arow.iter().map(|a| a * a).sum::<f64>() / (n2 * nf);

    let xy = DcovTerms::combine(2.0 * s1_xy / n2, (atot / n2) * (profile.total / n2), s3_xy);
    let xx = DcovTerms::combine(2.0 * s1_xx / n2, (atot / n2) * (atot / n2), s3_xx);
    (xy, xx)
}

/// dcov^2(x, profile) / sqrt(dcov^2(x, x)) together with a degeneracy flag;
/// the value is 0 when the column's distance variance vanishes.
pub fn marginal_utility(x: &[f64], profile: &DistanceProfile) -> (f64, bool) {
    let (xy, xx) = column_dcov_terms(x, profile);
    if xx.dcov2 < DEGENERACY_EPS {
        (0.0, true)
    } else {
        (xy.dcov2 / xx.dcov2.sqrt(), false)
    }
}

/// Main-effect utility of a column against the scaled response `y_tilde`.
pub fn omega_main(x: &[f64], y_tilde: ArrayView2<'_, f64>) -> Result<f64> {
    if x.len() != y_tilde.nrows() {
        return Err(IpdcError::Shape(format!(
            "column has {} rows, response has {}",
            x.len(),
            y_tilde.nrows()
        )));
    }
    if x.len() < MIN_ROWS {
        return Err(IpdcError::TooFewRows {
            n: x.len(),
            min: MIN_ROWS,
        });
    }
    let profile = DistanceProfile::from_cloud(y_tilde);
    Ok(marginal_utility(x, &profile).0)
}

/// Interaction utility: the same statistic applied to the squared column
/// against the squared response `y_star`.
pub fn omega_inter(x: &[f64], y_star: ArrayView2<'_, f64>) -> Result<f64> {
    if x.len() != y_star.nrows() {
        return Err(IpdcError::Shape(format!(
            "column has {} rows, response has {}",
            x.len(),
            y_star.nrows()
        )));
    }
    if x.len() < MIN_ROWS {
        return Err(IpdcError::TooFewRows {
            n: x.len(),
            min: MIN_ROWS,
        });
    }
    let profile = DistanceProfile::from_cloud(y_star);
    Ok(marginal_utility(&square_transform(x), &profile).0)
}
