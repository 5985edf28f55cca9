//! `rfgls` — command-line front end: fit the two-stage model, predict from a
//! saved fit, run the simulation benchmark, and run the two-node
//! step-function experiment. Every command is deterministic given its
//! configuration and seed, whatever the thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfgls::{fit_pipeline, krige_predict, predict_forest_row, run_experiment, Figure2Config};
use rfgls_cli::config::{self, load_json, resolve_seed, BenchConfig, FitConfig};
use rfgls_cli::{csvio, model_io, CliError};

#[derive(Parser)]
#[command(name = "rfgls", version, about = "GLS-style random forests for spatially correlated data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the two-stage model to a dataset and save the artifacts
    Fit {
        /// JSON configuration
        #[arg(long)]
        config: PathBuf,
        /// dataset CSV (header y,x1,...,xD,loc1[,loc2])
        #[arg(long)]
        data: PathBuf,
        /// output directory for forest.txt, report.json, kriging.txt
        #[arg(long)]
        out: PathBuf,
        /// seed override
        #[arg(long)]
        seed: Option<u64>,
        /// worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Predict from a saved fit at new points
    Predict {
        /// directory produced by `fit`
        #[arg(long)]
        model: PathBuf,
        /// points CSV (header x1,...,xD[,loc1[,loc2]]); location columns
        /// enable the kriging correction
        #[arg(long)]
        points: PathBuf,
        /// output CSV of predictions
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the simulation benchmark and write one CSV row per
    /// (setting, replicate, method)
    Bench {
        /// JSON configuration
        #[arg(long)]
        config: PathBuf,
        /// output CSV
        #[arg(long)]
        out: PathBuf,
        /// worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// seed override
        #[arg(long)]
        seed: Option<u64>,
        /// record wall-clock runtimes (breaks byte-identical reruns)
        #[arg(long)]
        timings: bool,
    },
    /// Two-node step-function experiment: per-replicate cutoff and leaf
    /// estimates under the plain and the GLS split criteria
    Figure2 {
        /// output CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn write_file(path: &PathBuf, text: String) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { config, data, out, seed, threads } => {
            set_threads(threads)?;
            let cfg: FitConfig = load_json(&config)?;
            let dataset = csvio::parse_dataset(&data)?;
            let seed = resolve_seed(seed, cfg.seed.or(cfg.forest.seed));
            let pipeline = cfg.pipeline(dataset.n_features(), seed);
            let (forest, report, ctx) = fit_pipeline(&dataset, &pipeline)?;
            model_io::save_fit(&out, &forest, &report, &ctx)?;
            println!(
                "fit: {} observations, {} trees, report written to {}",
                dataset.len(),
                forest.trees.len(),
                out.join(model_io::REPORT_FILE).display()
            );
            Ok(())
        }
        Command::Predict { model, points, out } => {
            let forest = model_io::load_forest(&model)?;
            let (rows, locs) = csvio::parse_points(&points)?;
            let d = forest.trees.first().map(|t| t.n_features).unwrap_or(0);
            if rows.iter().any(|r| r.len() != d) {
                return Err(CliError::Config(format!(
                    "{}: model expects {d} covariates",
                    points.display()
                )));
            }
            let preds = match (locs, model_io::load_kriging(&model)?) {
                (Some(locs), Some(ctx)) => {
                    let pts: Vec<(Vec<f64>, rfgls::Location)> = rows.into_iter().zip(locs).collect();
                    krige_predict(&forest, &ctx, &pts)?
                }
                _ => rows.iter().map(|r| predict_forest_row(&forest, r)).collect(),
            };
            write_file(&out, csvio::write_predictions(&preds))
        }
        Command::Bench { config, out, threads, seed, timings } => {
            set_threads(threads)?;
            let cfg: BenchConfig = load_json(&config)?;
            let seed = resolve_seed(seed, cfg.seed);
            let mut records = Vec::new();
            for setting in cfg.settings(seed) {
                records.extend(run_experiment(&setting)?);
            }
            write_file(&out, csvio::write_results(&records, timings))
        }
        Command::Figure2 { out, replicates, seed, threads } => {
            set_threads(threads)?;
            let mut cfg = Figure2Config::default();
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            } else if let Ok(env_seed) = std::env::var(config::SEED_ENV) {
                cfg.seed = env_seed
                    .parse()
                    .map_err(|_| CliError::Config(format!("{} must be an integer", config::SEED_ENV)))?;
            }
            let rows = rfgls::figure2_experiment(&cfg)?;
            write_file(&out, csvio::write_figure2(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
