//! Dataset container, simulation ground truth, CSV I/O, and reproducible
//! RNG streams.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::IpdcError;
use crate::Result;

/// Minimum number of observations accepted anywhere in the pipeline.
/// Distance-covariance V-statistics need n >= 3 to say anything useful.
pub const MIN_ROWS: usize = 3;

/// An n-row design matrix paired with an n-row response matrix.
///
/// `x` is n x p (covariates), `y` is n x q (responses; q = 1 for
/// single-response problems). Construction validates shapes and finiteness;
/// zero-variance covariate columns are flagged in `zero_variance` but kept.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub feature_names: Option<Vec<String>>,
    pub response_names: Option<Vec<String>>,
    /// 0-based indices of covariate columns whose entries are all equal.
    pub zero_variance: Vec<usize>,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Array2<f64>,
        feature_names: Option<Vec<String>>,
        response_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = x.nrows();
        if y.nrows() != n {
            return Err(IpdcError::RowCountMismatch {
                x_rows: n,
                y_rows: y.nrows(),
            });
        }
        if n < MIN_ROWS {
            return Err(IpdcError::TooFewRows { n, min: MIN_ROWS });
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(IpdcError::Shape(
                "x and y must each have at least one column".into(),
            ));
        }
        check_finite(&x, "x")?;
        check_finite(&y, "y")?;
        if let Some(names) = &feature_names {
            if names.len() != x.ncols() {
                return Err(IpdcError::Shape(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    x.ncols()
                )));
            }
        }
        if let Some(names) = &response_names {
            if names.len() != y.ncols() {
                return Err(IpdcError::Shape(format!(
                    "{} response names for {} columns",
                    names.len(),
                    y.ncols()
                )));
            }
        }
        let zero_variance = (0..x.ncols())
            .filter(|&j| {
                let col = x.column(j);
                let first = col[0];
                col.iter().all(|&v| v == first)
            })
            .collect();
        Ok(Dataset {
            x,
            y,
            feature_names,
            response_names,
            zero_variance,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }
}

fn check_finite(m: &Array2<f64>, what: &'static str) -> Result<()> {
    for ((i, j), &v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(IpdcError::NonFinite {
                what,
                row: i + 1,
                col: j + 1,
            });
        }
    }
    Ok(())
}

/// The generating truth of a simulated model, used to score screening and
/// selection output. All indices are 0-based internally.
///
/// `active_vars` is derived as the union of the indices appearing in
/// `interaction_pairs`; `main_set` lists the important main effects of the
/// working model (which, for misspecified models, need not coincide with the
/// literal generating terms).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub main_set: Vec<usize>,
    pub interaction_pairs: Vec<(usize, usize)>,
    pub active_vars: Vec<usize>,
    /// p x q coefficients of the main-effect part of the generating model.
    pub coef_main: Array2<f64>,
    /// Per-pair q-vectors of interaction coefficients.
    pub coef_inter: BTreeMap<(usize, usize), Vec<f64>>,
    pub intercept: Vec<f64>,
}

impl GroundTruth {
    pub fn new(
        main_set: Vec<usize>,
        interaction_pairs: Vec<(usize, usize)>,
        coef_main: Array2<f64>,
        coef_inter: BTreeMap<(usize, usize), Vec<f64>>,
        intercept: Vec<f64>,
    ) -> Result<Self> {
        let p = coef_main.nrows();
        let q = coef_main.ncols();
        if intercept.len() != q {
            return Err(IpdcError::Shape(format!(
                "intercept has {} entries for {} responses",
                intercept.len(),
                q
            )));
        }
        let mut main_set = main_set;
        main_set.sort_unstable();
        main_set.dedup();
        if main_set.iter().any(|&j| j >= p) {
            return Err(IpdcError::Input("main_set index out of range".into()));
        }
        let mut pairs = interaction_pairs;
        for pair in &mut pairs {
            if pair.0 == pair.1 {
                return Err(IpdcError::Input(format!(
                    "interaction pair ({}, {}) must have distinct indices",
                    pair.0 + 1,
                    pair.1 + 1
                )));
            }
            if pair.0 > pair.1 {
                *pair = (pair.1, pair.0);
            }
            if pair.1 >= p {
                return Err(IpdcError::Input("interaction index out of range".into()));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        for key in coef_inter.keys() {
            if !pairs.contains(key) {
                return Err(IpdcError::Input(format!(
                    "coef_inter pair ({}, {}) not in interaction_pairs",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
        }
        if coef_inter.values().any(|v| v.len() != q) {
            return Err(IpdcError::Shape(
                "every coef_inter entry must have q coefficients".into(),
            ));
        }
        let mut active_vars: Vec<usize> = pairs.iter().flat_map(|&(k, l)| [k, l]).collect();
        active_vars.sort_unstable();
        active_vars.dedup();
        Ok(GroundTruth {
            main_set,
            interaction_pairs: pairs,
            active_vars,
            coef_main,
            coef_inter,
            intercept,
        })
    }

    pub fn p(&self) -> usize {
        self.coef_main.nrows()
    }

    pub fn q(&self) -> usize {
        self.coef_main.ncols()
    }
}

/// A reproducible random stream keyed by `(master_seed, stream_id)`.
///
/// Streams with equal keys yield bit-identical draws; streams with distinct
/// keys are statistically independent. The key is expanded through a
/// SplitMix64 chain into a ChaCha12 seed, so stream construction is O(1) and
/// no stream ever needs to "skip over" another — this is what makes the
/// simulation results independent of worker count and replicate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        // For a fixed master seed the map stream_id -> state is a bijection,
        // so distinct streams can never share a ChaCha key.
        let mut state = splitmix_mix(self.master_seed ^ splitmix_mix(self.stream_id.wrapping_add(GOLDEN)));
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&splitmix_mix(state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// Read a numeric CSV into a dense matrix. Returns the matrix and, when
/// `has_header` is set, the header names.
///
/// Every field must parse as a finite number; errors report 1-based file
/// line and column. Ragged rows are rejected against the width of the first
/// line (header included).
pub fn load_csv(path: &Path, has_header: bool) -> Result<(Array2<f64>, Option<Vec<String>>)> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| IpdcError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut header: Option<Vec<String>> = None;
    let mut ncols: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut nrows = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IpdcError::Io {
            path: display.clone(),
            source,
        })?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match ncols {
            None => ncols = Some(fields.len()),
            Some(expected) if fields.len() != expected => {
                return Err(IpdcError::RaggedRow {
                    path: display,
                    line: line_no,
                    expected,
                    got: fields.len(),
                })
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        }
        for (j, field) in fields.iter().enumerate() {
            let parsed = field.parse::<f64>().ok().filter(|v| v.is_finite());
            match parsed {
                Some(v) => values.push(v),
                None => {
                    return Err(IpdcError::BadCell {
                        path: display,
                        line: line_no,
                        col: j + 1,
                        value: field.to_string(),
                    })
                }
            }
        }
        nrows += 1;
    }

    let ncols = ncols.unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(IpdcError::EmptyCsv { path: display });
    }
    let matrix = Array2::from_shape_vec((nrows, ncols), values)
        .expect("row-major fill matches recorded shape");
    Ok((matrix, header))
}

/// Write a matrix as CSV with shortest round-trip float formatting, so that
/// `load_csv` recovers it bit for bit.
pub fn save_csv(path: &Path, matrix: &Array2<f64>, header: Option<&[String]>) -> Result<()> {
    let display = path.display().to_string();
    let io_err = |source| IpdcError::Io {
        path: display.clone(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let mut write_all = || -> std::io::Result<()> {
        if let Some(names) = header {
            writeln!(w, "{}", names.join(","))?;
        }
        for row in matrix.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    write!(w, ",")?;
                }
                write!(w, "{v}")?;
                first = false;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write_all().map_err(|source| IpdcError::Io {
        path: display.clone(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_chacha::rand_core::RngCore;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_plain() {
        let f = write_temp("1,2\n3,4\n5,6\n");
        let (m, header) = load_csv(f.path(), false).unwrap();
        assert_eq!(m, array![[1., 2.], [3., 4.], [5., 6.]]);
        assert!(header.is_none());
    }

    #[test]
    fn load_csv_with_header() {
        let f = write_temp("a,b\n1,2\n3,4\n");
        let (m, header) = load_csv(f.path(), true).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(header.unwrap(), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn load_csv_ragged_reports_line() {
        let f = write_temp("1,2\n3,4,5\n");
        match load_csv(f.path(), false) {
            Err(IpdcError::RaggedRow {
                line,
                expected,
                got,
                ..
            }) => {
                assert_eq!((line, expected, got), (2, 2, 3));
            }
            other => panic!("expected ragged-row error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_bad_cell_reports_position() {
        let f = write_temp("1,2\n3,nan\n");
        match load_csv(f.path(), false) {
            Err(IpdcError::BadCell { line, col, value, .. }) => {
                assert_eq!((line, col), (2, 2));
                assert_eq!(value, "nan");
            }
            other => panic!("expected bad-cell error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_empty_is_an_error() {
        let f = write_temp("");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(IpdcError::EmptyCsv { .. })
        ));
        let header_only = write_temp("a,b\n");
        assert!(matches!(
            load_csv(header_only.path(), true),
            Err(IpdcError::EmptyCsv { .. })
        ));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let mut rng = RngStream::new(7, 0).rng();
        let vals: Vec<f64> = (0..60)
            .map(|i| match i % 5 {
                0 => f64::from_bits(rng.next_u64() >> 12) * 1e3, // subnormal-ish tail
                1 => -(rng.next_u32() as f64) / 97.0,
                2 => 0.1 + rng.next_u32() as f64,
                3 => -0.0,
                _ => (rng.next_u32() as f64).exp2().recip(),
            })
            .collect();
        let m = Array2::from_shape_vec((20, 3), vals).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_csv(f.path(), &m, None).unwrap();
        let (back, _) = load_csv(f.path(), false).unwrap();
        assert_eq!(m, back, "round trip must preserve every bit");
    }

    #[test]
    fn dataset_rejects_row_mismatch_and_short_data() {
        let x = Array2::zeros((4, 2));
        let y = Array2::zeros((3, 1));
        assert!(matches!(
            Dataset::new(x, y, None, None),
            Err(IpdcError::RowCountMismatch { x_rows: 4, y_rows: 3 })
        ));
        let x = Array2::zeros((2, 2));
        let y = Array2::zeros((2, 1));
        assert!(matches!(
            Dataset::new(x, y, None, None),
            Err(IpdcError::TooFewRows { n: 2, .. })
        ));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        let mut x = Array2::zeros((3, 2));
        x[[1, 1]] = f64::NAN;
        let y = Array2::zeros((3, 1));
        match Dataset::new(x, y, None, None) {
            Err(IpdcError::NonFinite { what, row, col }) => {
                assert_eq!((what, row, col), ("x", 2, 2));
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn dataset_flags_constant_columns_without_rejecting() {
        let x = array![[1., 5., 0.], [2., 5., 0.], [3., 5., 0.]];
        let y = array![[1.], [2.], [3.]];
        let d = Dataset::new(x, y, None, None).unwrap();
        assert_eq!(d.zero_variance, vec![1, 2]);
    }

    #[test]
    fn ground_truth_normalizes_pairs_and_derives_active_vars() {
        let t = GroundTruth::new(
            vec![1, 0],
            vec![(2, 0), (0, 5)],
            Array2::zeros((6, 1)),
            BTreeMap::new(),
            vec![0.0],
        )
        .unwrap();
        assert_eq!(t.main_set, vec![0, 1]);
        assert_eq!(t.interaction_pairs, vec![(0, 2), (0, 5)]);
        assert_eq!(t.active_vars, vec![0, 2, 5]);
        assert!(GroundTruth::new(
            vec![],
            vec![(3, 3)],
            Array2::zeros((6, 1)),
            BTreeMap::new(),
            vec![0.0],
        )
        .is_err());
    }

    #[test]
    fn equal_streams_agree_on_a_million_draws() {
        let mut a = RngStream::new(42, 7).rng();
        let mut b = RngStream::new(42, 7).rng();
        for _ in 0..1_000_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 0).rng();
        let mut b = RngStream::new(42, 1).rng();
        let mut c = RngStream::new(43, 0).rng();
        let draws_a: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let draws_b: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let draws_c: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_ne!(draws_a, draws_b);
        assert_ne!(draws_a, draws_c);
        assert_ne!(draws_b, draws_c);
    }
}
