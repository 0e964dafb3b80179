//! `enhg` drives the elastic net hypergraph pipeline end to end: construct
//! the hypergraph from samples, cluster or propagate labels, and emit
//! reproducible result files.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_grid, RawOptions, RunConfig};
use run::RunError;

#[derive(Parser)]
#[command(
    name = "enhg",
    version,
    about = "Elastic net hypergraph clustering and semi-supervised classification",
    after_help = "Examples:\n  \
        enhg cluster --synth blobs:k=3,d=20,n_per=30,sep=2.0,noise=0.2 --k 3 --seed 7 --out runs/c0\n  \
        enhg classify --synth blobs:k=3 --label-fraction 0.3 --seed 7 --out runs/s0\n  \
        enhg sweep --param gamma --grid 0.02:10:log --synth blobs:k=3 --k 3 --out runs/g0\n  \
        enhg export-path --input faces.csv --column 4 --out runs/p0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// CSV input (rows are feature dimensions, columns are samples)
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,

    /// Skip one header row of the CSV input
    #[arg(long)]
    has_header: bool,

    /// IDX image file (big-endian, unsigned-byte payload)
    #[arg(long, value_name = "PATH")]
    idx_images: Option<PathBuf>,

    /// IDX label file paired with --idx-images
    #[arg(long, value_name = "PATH")]
    idx_labels: Option<PathBuf>,

    /// Synthetic input, e.g. blobs:k=3,d=20,n_per=30,sep=2.0,noise=0.2
    /// or subspaces:k=3,d=20,sub_dim=3,n_per=30,noise=0.05
    #[arg(long, value_name = "SPEC")]
    synth: Option<String>,

    /// Skip the column normalization that otherwise precedes corruption
    #[arg(long)]
    no_normalize: bool,

    /// Quadratic penalty weight of the model form
    #[arg(long)]
    lambda: Option<f64>,

    /// Error trade-off of the model form (solver uses l1 = 1/gamma,
    /// l2 = lambda/gamma)
    #[arg(long)]
    gamma: Option<f64>,

    /// Solver l1 weight given directly (requires --l2)
    #[arg(long)]
    l1: Option<f64>,

    /// Solver l2 weight given directly (requires --l1)
    #[arg(long)]
    l2: Option<f64>,

    /// Hyperedge threshold: mean_all, mean_nonzero or fixed:<v>
    #[arg(long, value_name = "RULE")]
    threshold_rule: Option<String>,

    /// Graph construction: enhg, gauss or knn8
    #[arg(long)]
    baseline: Option<String>,

    /// Label propagation strength in (0, 1)
    #[arg(long)]
    alpha: Option<f64>,

    /// Fraction of labels revealed to the classifier (stratified per class)
    #[arg(long)]
    label_fraction: Option<f64>,

    /// Base seed for all randomized stages
    #[arg(long)]
    seed: Option<u64>,

    /// k-means restarts
    #[arg(long)]
    restarts: Option<usize>,

    /// Cluster count for cluster/sweep tasks
    #[arg(long)]
    k: Option<usize>,

    /// Corruption injection as mode:fraction:magnitude, e.g.
    /// gaussian_columns:0.25:0.1
    #[arg(long, value_name = "SPEC")]
    corrupt: Option<String>,

    /// Seed of the corruption draw (defaults to --seed)
    #[arg(long)]
    corrupt_seed: Option<u64>,

    /// JSON config file; explicit flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn to_raw(&self) -> RawOptions {
        RawOptions {
            input: self.input.clone(),
            has_header: self.has_header,
            idx_images: self.idx_images.clone(),
            idx_labels: self.idx_labels.clone(),
            synth: self.synth.clone(),
            no_normalize: self.no_normalize,
            lambda: self.lambda,
            gamma: self.gamma,
            l1: self.l1,
            l2: self.l2,
            threshold_rule: self.threshold_rule.clone(),
            baseline: self.baseline.clone(),
            alpha: self.alpha,
            label_fraction: self.label_fraction,
            seed: self.seed,
            restarts: self.restarts,
            k: self.k,
            corrupt: self.corrupt.clone(),
            corrupt_seed: self.corrupt_seed,
            out: self.out.clone(),
            config: self.config.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the graph and run hypergraph spectral clustering
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reveal a stratified fraction of labels and propagate the rest
    Classify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the robust matrix elastic net and export Z, S and X0
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Construct the hypergraph and serialize it
    Build {
        #[command(flatten)]
        common: CommonArgs,
        /// Also export H.csv, theta.csv and L.csv
        #[arg(long)]
        export_matrices: bool,
    },
    /// Score an assignments/predictions file against true labels
    Eval {
        /// Predicted labels (assignments.csv or predictions.csv)
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// True labels (labels.csv format)
        #[arg(long, value_name = "PATH")]
        truth: PathBuf,
        /// Directory holding the results.csv ledger
        #[arg(long, value_name = "DIR", default_value = "enhg-out")]
        out: PathBuf,
        /// Seed to record alongside the metrics
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export the full LARS-EN coefficient path of one sample
    ExportPath {
        #[command(flatten)]
        common: CommonArgs,
        /// Which sample to use as the response
        #[arg(long)]
        column: usize,
        /// Stop after this many active atoms (default min(d, m))
        #[arg(long)]
        stop_active: Option<usize>,
    },
    /// Re-run clustering across a parameter grid and tabulate AC/NMI
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter to vary: lambda, gamma, l1 or l2
        #[arg(long)]
        param: String,
        /// Grid as lo:hi:lin|log (defaults: lambda 0:1000:log, gamma 0.02:10:log)
        #[arg(long)]
        grid: Option<String>,
        /// Number of grid points
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
}

fn apply_thread_cap() -> Result<(), String> {
    let Ok(text) = std::env::var("ENHG_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .parse()
        .map_err(|_| format!("ENHG_THREADS must be a positive integer, got {text:?}"))?;
    if threads == 0 {
        return Err("ENHG_THREADS must be at least 1".to_string());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("failed to configure thread pool: {e}"))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Cluster { common } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            if config.k.is_none() {
                return Err(CliError::Config("k".into(), "cluster requires --k".into()));
            }
            run::cluster(&config).map_err(CliError::from)
        }
        Command::Classify { common } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            run::classify(&config).map_err(CliError::from)
        }
        Command::Solve { common } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            run::solve(&config).map_err(CliError::from)
        }
        Command::Build { common, export_matrices } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            run::build(&config, export_matrices).map_err(CliError::from)
        }
        Command::Eval { pred, truth, out, seed } => {
            run::eval(&pred, &truth, &out, seed).map_err(CliError::from)
        }
        Command::ExportPath { common, column, stop_active } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            run::export_path(&config, column, stop_active).map_err(CliError::from)
        }
        Command::Sweep { common, param, grid, points } => {
            let config = RunConfig::resolve(&common.to_raw())?;
            if config.k.is_none() {
                return Err(CliError::Config("k".into(), "sweep requires --k".into()));
            }
            let grid_text = grid.unwrap_or_else(|| match param.as_str() {
                "lambda" => "0:1000:log".to_string(),
                "gamma" => "0.02:10:log".to_string(),
                "l1" => "0.01:1:log".to_string(),
                _ => "0.001:10:log".to_string(),
            });
            let values = parse_grid(&grid_text, points)?;
            run::sweep(&config, &param, values).map_err(CliError::from)
        }
    }
}

enum CliError {
    Config(String, String),
    Run(RunError),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.field.to_string(), e.message)
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Run(e)
    }
}

fn main() -> ExitCode {
    if let Err(message) = apply_thread_cap() {
        eprintln!("enhg: invalid configuration (ENHG_THREADS): {message}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(field, message)) => {
            eprintln!("enhg: invalid configuration ({field}): {message}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("enhg: {e}");
            ExitCode::from(1)
        }
    }
}
