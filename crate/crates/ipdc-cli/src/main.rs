//! Command-line front end for the screening/selection pipeline.
//!
//! Four subcommands: `dcorr` measures distance correlation between two
//! samples, `screen` ranks covariates against a (possibly multivariate)
//! response, `select` fits the sparse interaction model on a screened
//! candidate set, and `simulate` runs the Monte-Carlo benchmark.
//!
//! Exit codes: 0 success, 2 configuration problem (every problem is
//! listed), 3 input-data problem, 4 a solver stopped before reaching its
//! optimality tolerance (outputs are still written).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use ipdc::data::load_csv;
use ipdc::dcov::{sample_dcorr, sample_dcov2};
use ipdc::error::ErrorKind;
use ipdc::screen::{
    run_screen, Baseline, KCount, ScreenConfig, ScreenSets, SelectRule, SisAggregate,
};
use ipdc::select::{run_select, LambdaRule, SelectConfig, ThresholdRule};
use ipdc::sim::{
    report_table, run_monte_carlo, CustomModel, Method, ModelKind, NoiseKind, SimModelSpec,
    SimRunConfig,
};
use ipdc::{Dataset, IpdcError, Result, RngStream};

#[derive(Parser)]
#[command(name = "ipdc", version, about = "Interaction screening and selection")]
struct Cli {
    /// Worker threads for parallel stages: "auto" or a count. The
    /// IPDC_THREADS environment variable is used when left on auto.
    #[arg(long, global = true, default_value = "auto")]
    threads: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance correlation between two samples (rows are observations).
    Dcorr(DcorrArgs),
    /// Rank covariates and keep main-effect and interaction candidates.
    Screen(ScreenArgs),
    /// Fit the sparse interaction model on screened candidates.
    Select(SelectArgs),
    /// Run the Monte-Carlo benchmark on synthetic data.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DcorrArgs {
    /// CSV with the first sample.
    #[arg(long)]
    x: PathBuf,
    /// CSV with the second sample (same number of rows).
    #[arg(long)]
    y: PathBuf,
    /// Treat the first CSV line as column names.
    #[arg(long)]
    header: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScreenArgs {
    /// Covariate CSV, one row per observation.
    #[arg(long)]
    x: PathBuf,
    /// Response CSV with the same rows (one or more columns).
    #[arg(long)]
    y: PathBuf,
    /// Treat the first line of each CSV as column names.
    #[arg(long)]
    header: bool,
    /// Ranking rule: "topk" keeps a fixed number per ranking,
    /// "threshold" keeps utilities above a cutoff.
    #[arg(long, default_value = "topk")]
    rule: String,
    /// Budget for both rankings: "auto" (n / ln n, rounded down) or a
    /// count.
    #[arg(long, default_value = "auto")]
    d: String,
    /// Main-effect budget, overriding --d.
    #[arg(long)]
    d_main: Option<String>,
    /// Interaction budget, overriding --d.
    #[arg(long)]
    d_inter: Option<String>,
    /// Main-effect utility cutoff (threshold rule).
    #[arg(long)]
    tau1: Option<f64>,
    /// Interaction utility cutoff (threshold rule).
    #[arg(long)]
    tau2: Option<f64>,
    /// Pool main and interaction candidates before forming pairs.
    #[arg(long)]
    union: bool,
    /// Use a comparison ranking instead: sis2_max, sis2_sum, or dcsis2.
    #[arg(long, default_value = "none")]
    baseline: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    header: bool,
    /// Screening report (JSON) naming the candidate set.
    #[arg(long)]
    screen: PathBuf,
    /// Grouped penalty: "cv" or a fixed nonnegative value.
    #[arg(long, default_value = "cv")]
    lambda: String,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Penalty grid size for cross-validation.
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    /// Row-norm cutoff after the grouped fit: "auto" or a value.
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// Fit on centered columns without unit-variance scaling.
    #[arg(long)]
    no_standardize: bool,
    /// Keep the grouped coefficients instead of refitting per response.
    #[arg(long)]
    no_refit: bool,
    /// Seed for cross-validation fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in generating model (1 through 6) or "custom" with --spec.
    #[arg(long)]
    model: String,
    /// JSON description of a custom model (with --model custom).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Training rows per replicate.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Covariates per replicate.
    #[arg(long, default_value_t = 500)]
    p: usize,
    /// Autoregressive correlation between neighboring covariates.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Monte-Carlo replicates.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Master seed; replicate r uses stream r.
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Held-out rows for prediction error.
    #[arg(long, default_value_t = 10_000)]
    test_n: usize,
    /// Response noise: gaussian, t5, or none (default depends on the
    /// model).
    #[arg(long)]
    noise: Option<String>,
    /// Recode even covariate columns (1-based) to three levels (default
    /// depends on the model).
    #[arg(long)]
    discretize_even: Option<bool>,
    /// Comma-separated methods: ipdc, sis2_max, sis2_sum, dcsis2,
    /// ipdc_glasso, ipdc_glasso_lasso, oracle.
    #[arg(long, default_value = "ipdc,sis2_max,sis2_sum,dcsis2")]
    methods: String,
    /// Pool main and interaction candidates: auto (on when there are
    /// several responses), on, or off.
    #[arg(long, default_value = "auto")]
    union: String,
    /// Screening budget for both rankings: "auto" or a count.
    #[arg(long, default_value = "auto")]
    d: String,
    /// Main-effect budget, overriding --d.
    #[arg(long)]
    d_main: Option<String>,
    /// Interaction budget, overriding --d.
    #[arg(long)]
    d_inter: Option<String>,
    /// Cross-validation folds for the selection stage.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Penalty grid size for the selection stage.
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    /// Grouped penalty for the selection stage: "cv" or a fixed value.
    #[arg(long, default_value = "cv")]
    lambda: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the aggregate CSV table here.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::NonConvergence => 4,
            }
        }
    };
    std::process::exit(code);
}

fn execute(cli: &Cli) -> Result<i32> {
    setup_threads(&cli.threads)?;
    match &cli.command {
        Command::Dcorr(args) => cmd_dcorr(args),
        Command::Screen(args) => cmd_screen(args),
        Command::Select(args) => cmd_select(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn setup_threads(flag: &str) -> Result<()> {
    let requested = if flag == "auto" {
        match std::env::var("IPDC_THREADS") {
            Ok(v) if !v.is_empty() && v != "auto" => Some(v.parse::<usize>().map_err(|_| {
                IpdcError::Config(format!(
                    "IPDC_THREADS must be \"auto\" or a positive integer, got \"{v}\""
                ))
            })?),
            _ => None,
        }
    } else {
        Some(flag.parse::<usize>().map_err(|_| {
            IpdcError::Config(format!(
                "--threads must be \"auto\" or a positive integer, got \"{flag}\""
            ))
        })?)
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(IpdcError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| IpdcError::Config(format!("could not configure the thread pool: {e}")))?;
    }
    Ok(())
}

/// Write through a temporary file in the destination directory so the
/// target is replaced atomically or not at all.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let io_err = |e: std::io::Error| IpdcError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    tmp.write_all(content.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_dcorr(args: &DcorrArgs) -> Result<i32> {
    let (x, _) = load_csv(&args.x, args.header)?;
    let (y, _) = load_csv(&args.y, args.header)?;
    let terms = sample_dcov2(x.view(), y.view())?;
    let dcorr = sample_dcorr(x.view(), y.view())?;
    let report = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "n": x.nrows(),
        "x_cols": x.ncols(),
        "y_cols": y.ncols(),
        "s1": terms.s1,
        "s2": terms.s2,
        "s3": terms.s3,
        "dcov2": terms.dcov2,
        "dcorr": dcorr,
    });
    emit(&args.out, &format!("{report:#}\n"))?;
    Ok(0)
}

fn parse_k(s: &str, flag: &str, problems: &mut Vec<String>) -> KCount {
    if s == "auto" {
        return KCount::Auto;
    }
    match s.parse::<usize>() {
        Ok(k) if k > 0 => KCount::Fixed(k),
        _ => {
            problems.push(format!(
                "{flag} must be \"auto\" or a positive integer, got \"{s}\""
            ));
            KCount::Auto
        }
    }
}

fn parse_baseline(s: &str, problems: &mut Vec<String>) -> Baseline {
    match s {
        "none" => Baseline::None,
        "sis2_max" => Baseline::Sis2(SisAggregate::Max),
        "sis2_sum" => Baseline::Sis2(SisAggregate::Sum),
        "dcsis2" => Baseline::Dcsis2,
        other => {
            problems.push(format!(
                "--baseline must be none, sis2_max, sis2_sum, or dcsis2, got \"{other}\""
            ));
            Baseline::None
        }
    }
}

fn screen_config(args: &ScreenArgs) -> Result<ScreenConfig> {
    let mut problems = Vec::new();
    let rule = match args.rule.as_str() {
        "topk" => SelectRule::TopK {
            d_main: parse_k(
                args.d_main.as_deref().unwrap_or(&args.d),
                "--d-main",
                &mut problems,
            ),
            d_inter: parse_k(
                args.d_inter.as_deref().unwrap_or(&args.d),
                "--d-inter",
                &mut problems,
            ),
        },
        "threshold" => {
            let tau1 = args.tau1.unwrap_or_else(|| {
                problems.push("--tau1 is required with --rule threshold".to_string());
                f64::NAN
            });
            let tau2 = args.tau2.unwrap_or_else(|| {
                problems.push("--tau2 is required with --rule threshold".to_string());
                f64::NAN
            });
            SelectRule::Threshold { tau1, tau2 }
        }
        other => {
            problems.push(format!("--rule must be topk or threshold, got \"{other}\""));
            SelectRule::TopK {
                d_main: KCount::Auto,
                d_inter: KCount::Auto,
            }
        }
    };
    let baseline = parse_baseline(&args.baseline, &mut problems);
    if problems.is_empty() {
        Ok(ScreenConfig {
            rule,
            union_mode: args.union,
            baseline,
        })
    } else {
        Err(IpdcError::Config(problems.join("; ")))
    }
}

fn load_dataset(x: &Path, y: &Path, header: bool) -> Result<Dataset> {
    let (x_mat, x_names) = load_csv(x, header)?;
    let (y_mat, y_names) = load_csv(y, header)?;
    Dataset::new(x_mat, y_mat, x_names, y_names)
}

fn cmd_screen(args: &ScreenArgs) -> Result<i32> {
    let config = screen_config(args)?;
    let data = load_dataset(&args.x, &args.y, args.header)?;
    let result = run_screen(&data, &config)?;
    emit(&args.out, &format!("{:#}\n", result.to_json()))?;
    Ok(0)
}

fn parse_lambda(s: &str, problems: &mut Vec<String>) -> LambdaRule {
    if s == "cv" {
        return LambdaRule::Cv;
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => LambdaRule::Fixed(v),
        _ => {
            problems.push(format!(
                "--lambda must be \"cv\" or a nonnegative number, got \"{s}\""
            ));
            LambdaRule::Cv
        }
    }
}

fn parse_threshold(s: &str, problems: &mut Vec<String>) -> ThresholdRule {
    if s == "auto" {
        return ThresholdRule::Auto;
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => ThresholdRule::Fixed(v),
        _ => {
            problems.push(format!(
                "--threshold must be \"auto\" or a nonnegative number, got \"{s}\""
            ));
            ThresholdRule::Auto
        }
    }
}

fn cmd_select(args: &SelectArgs) -> Result<i32> {
    let mut problems = Vec::new();
    let lambda = parse_lambda(&args.lambda, &mut problems);
    let threshold = parse_threshold(&args.threshold, &mut problems);
    if !problems.is_empty() {
        return Err(IpdcError::Config(problems.join("; ")));
    }
    let config = SelectConfig {
        lambda,
        folds: args.folds,
        grid_size: args.grid_size,
        threshold,
        standardize: !args.no_standardize,
        refit: !args.no_refit,
        ..SelectConfig::default()
    };

    let data = load_dataset(&args.x, &args.y, args.header)?;
    let screen_path = args.screen.display().to_string();
    let text = std::fs::read_to_string(&args.screen).map_err(|e| IpdcError::Io {
        path: screen_path.clone(),
        source: e,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| IpdcError::Json {
        path: screen_path.clone(),
        message: e.to_string(),
    })?;
    let sets = ScreenSets::from_json(&value, &screen_path)?;

    let mut rng = RngStream::new(args.seed, 0).rng();
    let result = run_select(&data, &sets, &config, &mut rng)?;
    emit(&args.out, &format!("{:#}\n", result.to_json()))?;
    if result.diagnostics.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: the solver stopped before reaching its optimality tolerance \
             (largest violation {:.3e}); the report was still written",
            result.diagnostics.kkt_violation
        );
        Ok(4)
    }
}

/// Read a custom model description. Indices in the file are 1-based.
fn parse_custom(path: &Path) -> Result<CustomModel> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| IpdcError::Io {
        path: display.clone(),
        source: e,
    })?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| IpdcError::Json {
        path: display.clone(),
        message: e.to_string(),
    })?;
    let bad = |msg: String| IpdcError::Json {
        path: display.clone(),
        message: msg,
    };

    let q = v
        .get("q")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| bad("\"q\" must be a positive integer".into()))? as usize;

    let floats = |value: &serde_json::Value, what: &str| -> Result<Vec<f64>> {
        value
            .as_array()
            .ok_or_else(|| bad(format!("{what} must be an array of numbers")))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| bad(format!("{what} must contain only numbers")))
            })
            .collect()
    };
    let index = |value: Option<&serde_json::Value>, what: &str| -> Result<usize> {
        let raw = value
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad(format!("{what} must be a positive integer (1-based)")))?;
        if raw == 0 {
            return Err(bad(format!("{what} uses 1-based indices")));
        }
        Ok(raw as usize - 1)
    };

    let intercept = match v.get("intercept") {
        None => vec![0.0; q],
        Some(arr) => floats(arr, "\"intercept\"")?,
    };

    let mut main = Vec::new();
    if let Some(entries) = v.get("main") {
        let entries = entries
            .as_array()
            .ok_or_else(|| bad("\"main\" must be an array".into()))?;
        for entry in entries {
            let j = index(entry.get("var"), "main term \"var\"")?;
            let coef = floats(
                entry
                    .get("coef")
                    .ok_or_else(|| bad("main term is missing \"coef\"".into()))?,
                "main term \"coef\"",
            )?;
            main.push((j, coef));
        }
    }

    let mut inter = Vec::new();
    if let Some(entries) = v.get("inter") {
        let entries = entries
            .as_array()
            .ok_or_else(|| bad("\"inter\" must be an array".into()))?;
        for entry in entries {
            let vars = entry
                .get("vars")
                .and_then(|x| x.as_array())
                .ok_or_else(|| bad("interaction is missing \"vars\": [a, b]".into()))?;
            if vars.len() != 2 {
                return Err(bad("interaction \"vars\" must list exactly two indices".into()));
            }
            let k = index(Some(&vars[0]), "interaction index")?;
            let l = index(Some(&vars[1]), "interaction index")?;
            let coef = floats(
                entry
                    .get("coef")
                    .ok_or_else(|| bad("interaction is missing \"coef\"".into()))?,
                "interaction \"coef\"",
            )?;
            inter.push(((k, l), coef));
        }
    }

    Ok(CustomModel {
        q,
        intercept,
        main,
        inter,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let mut problems = Vec::new();

    let model = match args.model.as_str() {
        "custom" => match &args.spec {
            Some(path) => Some(ModelKind::Custom(parse_custom(path)?)),
            None => {
                problems.push("--model custom requires --spec".to_string());
                None
            }
        },
        id => match id.parse::<u32>().map_err(|_| ()).and_then(|i| {
            ModelKind::from_id(i).map_err(|e| problems.push(e.to_string()))
        }) {
            Ok(m) => Some(m),
            Err(()) => {
                if problems.is_empty() {
                    problems.push(format!(
                        "--model must be 1 through 6 or \"custom\", got \"{id}\""
                    ));
                }
                None
            }
        },
    };

    let mut methods = Vec::new();
    for name in args.methods.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match Method::parse(name) {
            Ok(m) => methods.push(m),
            Err(e) => problems.push(e.to_string()),
        }
    }
    if methods.is_empty() && problems.is_empty() {
        problems.push("--methods must name at least one method".to_string());
    }

    let lambda = parse_lambda(&args.lambda, &mut problems);
    let d_main = parse_k(
        args.d_main.as_deref().unwrap_or(&args.d),
        "--d-main",
        &mut problems,
    );
    let d_inter = parse_k(
        args.d_inter.as_deref().unwrap_or(&args.d),
        "--d-inter",
        &mut problems,
    );
    let noise = match &args.noise {
        Some(s) => match NoiseKind::parse(s) {
            Ok(k) => Some(k),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        },
        None => None,
    };
    let union_mode = match (args.union.as_str(), &model) {
        ("on", _) => true,
        ("off", _) => false,
        ("auto", Some(m)) => m.q() > 1,
        ("auto", None) => false,
        (other, _) => {
            problems.push(format!(
                "--union must be auto, on, or off, got \"{other}\""
            ));
            false
        }
    };
    if !problems.is_empty() {
        return Err(IpdcError::Config(problems.join("; ")));
    }
    let model = model.expect("model parsed when no problems were found");

    let mut spec = SimModelSpec::standard(model, args.n, args.p, args.rho, args.reps, args.seed);
    spec.test_n = args.test_n;
    if let Some(k) = noise {
        spec.noise = k;
    }
    if let Some(b) = args.discretize_even {
        spec.discretize_even = b;
    }

    let run = SimRunConfig {
        methods,
        screen: ScreenConfig {
            rule: SelectRule::TopK { d_main, d_inter },
            union_mode,
            baseline: Baseline::None,
        },
        select: SelectConfig {
            lambda,
            folds: args.folds,
            grid_size: args.grid_size,
            ..SelectConfig::default()
        },
    };

    let report = run_monte_carlo(&spec, &run)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| IpdcError::Config(format!("could not serialize the report: {e}")))?;
    emit(&args.out, &format!("{json}\n"))?;
    if let Some(table_path) = &args.table {
        write_atomic(table_path, &report_table(&report))?;
    }

    let nonconverged: usize = report.summaries.iter().map(|s| s.nonconverged).sum();
    if nonconverged > 0 {
        eprintln!(
            "warning: {nonconverged} fit(s) stopped before reaching their optimality \
             tolerance; the report was still written"
        );
        Ok(4)
    } else {
        Ok(0)
    }
}
