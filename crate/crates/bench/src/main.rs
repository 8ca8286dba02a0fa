use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stg_bench::config::{ExperimentConfig, Method, Sweep};
use stg_bench::error::{BenchError, Result};
use stg_bench::lambda::{select_c, select_c_with_errors, LambdaRule};
use stg_bench::output::{emit_curves, emit_records, fmt_num};
use stg_bench::plot::{emit_plot, PlotLabels};
use stg_bench::runner::{fit_method, run_experiment, FitSettings};
use stg_core::baselines::exhaustive_best_subset;
use stg_core::linmodel::{
    generate_dataset, generate_signal, load_csv_dataset, semi_synthetic, ColumnRef, DesignSpec, LinearDataset,
};
use stg_core::solver::SolverConfig;
use stg_core::stream;

/// Sparse support recovery with Projected-STG and classical baselines.
#[derive(Parser)]
#[command(name = "pstg", version)]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for CSV and SVG outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a recovery sweep and write records.csv, curves.csv and success.svg.
    Sweep(SweepArgs),
    /// Fit one method to a dataset and write its coefficients as CSV.
    Fit(FitArgs),
    /// Report the cross-validated lambda multiplier C for a dataset.
    Cv(DataArgs),
    /// Exhaustive best-subset search on a small dataset.
    Oracle(DataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    VaryN,
    VaryK,
}

#[derive(Args)]
struct SweepArgs {
    /// Built-in protocol used when no config file is given.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated methods, e.g. ProjSTG,LASSO,OMP.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Print the effective config instead of running it.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Numeric CSV dataset; without it a synthetic instance is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response column (name or zero-based index) of the dataset.
    #[arg(long, default_value = "0")]
    response: String,
    /// Standardize the design columns of a loaded dataset.
    #[arg(long)]
    standardize: bool,
    /// Replace the loaded response by a planted K-sparse signal plus noise of this level.
    #[arg(long)]
    semi_synthetic: Option<f64>,
    /// Support size.
    #[arg(long, short)]
    k: usize,
    /// Rows of a synthetic instance.
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Columns of a synthetic instance.
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Noise level of a synthetic instance.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "ProjSTG")]
    method: String,
    /// Explicit penalty weight; by default C * lambda_base with C cross-validated.
    #[arg(long)]
    lambda: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pstg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sweep(args) => sweep(cli, args),
        Command::Fit(args) => fit(cli, args),
        Command::Cv(args) => cv(cli, args),
        Command::Oracle(args) => oracle(cli, args),
    }
}

fn base_config(cli: &Cli, preset: Option<Preset>) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(Preset::VaryK)) => ExperimentConfig::vary_k_default(),
        (None, _) => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let mut cfg = base_config(cli, args.preset)?;
    if let Some(grid) = &args.grid {
        cfg.grid = grid.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(m) = &args.methods {
        cfg.methods = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(s) = args.sigma {
        cfg.fixed.sigma = s;
    }
    if let Some(d) = args.d {
        cfg.fixed.d = d;
    }
    cfg.validate()?;
    if args.dry_run {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let out = run_experiment(&cfg, cli.threads)?;
    let dir = out_dir(&cli.out_dir)?;
    emit_records(&dir.join("records.csv"), &out.records)?;
    emit_curves(&dir.join("curves.csv"), &out.curves)?;
    let labels = PlotLabels {
        x_label: match cfg.sweep {
            Sweep::VaryN => "number of samples N".into(),
            Sweep::VaryK => "sparsity K".into(),
        },
        ..PlotLabels::default()
    };
    emit_plot(&dir.join("success.svg"), &out.curves, &labels)?;
    for f in &out.failures {
        eprintln!("failed fit: {} at x = {}, trial {}: {}", f.method.label(), f.x, f.trial, f.message);
    }
    for c in &out.curves {
        println!("{:<9} x = {:<4} success = {:.3} [{:.3}, {:.3}]", c.method, c.x, c.success_rate, c.ci_low, c.ci_high);
    }
    Ok(())
}

fn out_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

fn dataset(cli: &Cli, args: &DataArgs) -> Result<LinearDataset> {
    let seed = cli.seed.unwrap_or(0);
    let mut rng = stream(seed);
    match &args.data {
        Some(path) => {
            let response = match args.response.parse::<ColumnRef>() {
                Ok(r) => r,
                Err(never) => match never {},
            };
            let data = load_csv_dataset(path, &response, args.standardize)?;
            match args.semi_synthetic {
                Some(sigma) => Ok(semi_synthetic(data.x.view(), args.k, sigma, &mut rng)?),
                None => Ok(data),
            }
        }
        None => {
            let spec = DesignSpec::new(stg_core::linmodel::Ensemble::GaussianIid, args.n, args.d);
            let signal = generate_signal(args.d, args.k, &mut rng)?;
            Ok(generate_dataset(&spec, &signal, args.sigma, &mut rng)?)
        }
    }
}

fn rule_and_solver(cli: &Cli) -> Result<(LambdaRule, SolverConfig, ExperimentConfig)> {
    let cfg = base_config(cli, None)?;
    let solver = SolverConfig { seed: cfg.master_seed, ..cfg.solver.apply() };
    Ok((cfg.lambda_rule.clone(), solver, cfg))
}

/// Noise level for the reference lambda: the known sigma of synthetic data,
/// otherwise the response's standard deviation as a conservative stand-in.
fn noise_level(data: &LinearDataset) -> f64 {
    if data.truth.is_some() {
        return data.sigma;
    }
    let n = data.rows() as f64;
    let mean = data.y.mean().unwrap_or(0.0);
    let var = data.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    var.sqrt()
}

fn fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let mut data = dataset(cli, &args.data)?;
    data.sigma = noise_level(&data);
    let method: Method = args.method.parse()?;
    let (rule, solver, cfg) = rule_and_solver(cli)?;
    let k = args.data.k;
    let base = rule.base_level(data.sigma, data.cols(), k, data.rows())?;
    let stg_lambda = match args.lambda {
        Some(l) => l,
        None if method.uses_cv_lambda() => select_c(&data, k, &rule, &solver)? * base,
        None => base,
    };
    let settings = FitSettings {
        stg_lambda,
        penalized_lambda: args.lambda.unwrap_or(base),
        baselines: cfg.baselines.at(args.lambda.unwrap_or(base), cfg.master_seed),
        solver,
    };
    let result = fit_method(method, &data, k, &settings)?;
    let path = out_dir(&cli.out_dir)?.join("fit.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| BenchError::Csv(e.to_string()))?;
    let csv_err = |e: csv::Error| BenchError::Csv(e.to_string());
    w.write_record(["index", "beta_hat", "selected"]).map_err(csv_err)?;
    for (i, b) in result.beta.iter().enumerate() {
        let selected = result.support.contains(&i);
        w.write_record([i.to_string(), fmt_num(*b), selected.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;
    println!("support: {:?}", result.support);
    println!("wrote {}", path.display());
    Ok(())
}

fn cv(cli: &Cli, args: &DataArgs) -> Result<()> {
    let mut data = dataset(cli, args)?;
    data.sigma = noise_level(&data);
    let (rule, solver, _) = rule_and_solver(cli)?;
    let (c, table) = select_c_with_errors(&data, args.k, &rule, &solver)?;
    for (g, e) in table {
        println!("C = {:<10} cv error = {}", fmt_num(g), fmt_num(e));
    }
    let base = rule.base_level(data.sigma, data.cols(), args.k, data.rows())?;
    println!("selected C = {}  lambda = {}", fmt_num(c), fmt_num(c * base));
    Ok(())
}

fn oracle(cli: &Cli, args: &DataArgs) -> Result<()> {
    let data = dataset(cli, args)?;
    let best = exhaustive_best_subset(data.x.view(), data.y.view(), args.k)?;
    println!("support: {:?}", best.support);
    println!("residual: {}", fmt_num(best.residual));
    if let Some(truth) = &data.truth {
        println!("truth:   {:?}", truth.support);
    }
    Ok(())
}
