//! Integration behavior of the selection stage through the public API:
//! cross-validation under pure noise, and exact recovery of a noiseless
//! generating model through the full screen-then-select pipeline.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use ipdc::screen::{run_screen, Baseline, KCount, ScreenConfig, ScreenSets, SelectRule};
use ipdc::select::{
    build_design, lambda_max, make_lambda_grid, run_select, select_lambda_cv, GlassoOpts,
    SelectConfig, Term,
};
use ipdc::{Dataset, RngStream};

/// When the response carries no signal, cross-validation should favor
/// heavy shrinkage: the chosen penalty lands in the top quartile of the
/// descending grid almost every time.
#[test]
fn cross_validation_shrinks_hard_under_pure_noise() {
    let grid_size = 40;
    let quartile = grid_size / 4;
    let mut in_top = 0;
    let trials = 100;
    for trial in 0..trials {
        let mut rng = RngStream::new(7_001, trial).rng();
        let n = 40;
        let p = 8;
        let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let y = Array2::from_shape_fn((n, 2), |_| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x, y, None, None).unwrap();
        let sets = ScreenSets {
            p,
            q: 2,
            mains: (0..p).collect(),
            pairs: vec![(0, 1), (2, 3)],
        };
        let design = build_design(&data, &sets, true).unwrap();
        let grid = make_lambda_grid(lambda_max(&design).unwrap(), grid_size);
        let outcome =
            select_lambda_cv(&design, &grid, 5, &mut rng, &GlassoOpts::default()).unwrap();
        let chosen = grid
            .iter()
            .position(|&l| l == outcome.lambda)
            .expect("chosen penalty comes from the grid");
        if chosen < quartile {
            in_top += 1;
        }
    }
    assert!(
        in_top >= 90,
        "only {in_top}/{trials} noise fits chose a top-quartile penalty"
    );
}

/// Noiseless data with two main effects and one product term per response:
/// the full pipeline (screen, grouped fit, threshold, per-response refit)
/// keeps the generating terms and reproduces the response surface.
#[test]
fn noiseless_pipeline_reproduces_the_generating_surface() {
    let n = 80;
    let p = 12;
    let q = 3;
    let mut rng = RngStream::new(7_002, 0).rng();
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    // Per-response weights on X0, X2, and X0X1.
    let mains = [[2.0, -1.0, 0.5], [1.5, 2.0, -2.0]];
    let inter = [3.0, -1.5, 2.0];
    let mut y = Array2::zeros((n, q));
    for i in 0..n {
        for r in 0..q {
            y[[i, r]] = 0.7 + mains[0][r] * x[[i, 0]]
                + mains[1][r] * x[[i, 2]]
                + inter[r] * x[[i, 0]] * x[[i, 1]];
        }
    }
    let data = Dataset::new(x.clone(), y.clone(), None, None).unwrap();

    let screen_config = ScreenConfig {
        rule: SelectRule::TopK {
            d_main: KCount::Auto,
            d_inter: KCount::Auto,
        },
        union_mode: true,
        baseline: Baseline::None,
    };
    let screened = run_screen(&data, &screen_config).unwrap();
    let sets = ScreenSets::from_screen(&screened);
    assert!(sets.mains.contains(&0) && sets.mains.contains(&2));
    assert!(sets.pairs.contains(&(0, 1)));

    let mut select_rng = RngStream::new(7_002, 1).rng();
    let result = run_select(&data, &sets, &SelectConfig::default(), &mut select_rng).unwrap();
    assert!(result.diagnostics.converged);
    for needed in [Term::Main(0), Term::Main(2), Term::Inter(0, 1)] {
        assert!(
            result.row_support.contains(&needed),
            "{needed:?} missing from the selected rows"
        );
    }

    // The refit per response should reproduce the surface almost exactly.
    let fitted = result.predict(x.view());
    let mut worst = 0.0_f64;
    for i in 0..n {
        for r in 0..q {
            worst = worst.max((fitted[[i, r]] - y[[i, r]]).abs());
        }
    }
    assert!(
        worst <= 0.05,
        "worst in-sample reconstruction error {worst:.4}"
    );
}
