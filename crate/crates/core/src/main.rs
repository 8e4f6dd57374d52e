use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing::warn;

use stablekm::bench::{self, Algorithm, BenchOptions, RunOptions, RunReport, Timings};
use stablekm::config::{self, ConfigOverrides};
use stablekm::datasets;
use stablekm::stable::MemoryMode;
use stablekm::suites::{self, Suite};
use stablekm::Error;

#[derive(Parser, Debug)]
#[command(name = "stablekm", version, about = "Stable k-means clustering and stability measurements")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// auto, in_memory, spanning_tree or external_sort:<chunk_edges>.
    #[arg(long, global = true)]
    memory_mode: Option<MemoryMode>,
    /// Largest multiset size for two_means.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    lloyd_tol: Option<f64>,
    #[arg(long, global = true)]
    lloyd_max_iter: Option<usize>,
    /// Directory for the JSON report and the CSV files.
    #[arg(long, global = true, default_value = "stablekm-out")]
    out_dir: PathBuf,
    /// Log level used when RUST_LOG is unset.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster one dataset with one algorithm.
    Cluster(ClusterArgs),
    /// Stability numbers of the label-seeded Lloyd clustering.
    Stability(StabilityArgs),
    /// Every registered dataset, raw and normalized, every table.
    Bench(BenchArgs),
    /// Run a property suite over generated instances.
    Synth(SynthArgs),
    /// Print the effective configuration.
    Config,
    /// List the registered datasets and where they are looked up.
    Datasets,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Registered name (iris, wine, banknote, letter) or a CSV path.
    #[arg(long)]
    dataset: String,
    /// Scale every feature to [0, 1].
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Number of clusters; defaults to the label count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "stable")]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Fixed threshold for robust (needs --t).
    #[arg(long)]
    r: Option<f64>,
    /// Fixed degree cutoff for robust (needs --r).
    #[arg(long)]
    t: Option<f64>,
    /// Cap on the point pairs two_means lifts.
    #[arg(long)]
    max_pairs: Option<usize>,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_delimiter = ',', default_values_t = bench::TABLE_ETAS)]
    eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = bench::TABLE_EPSS)]
    eps: Vec<f64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// k-means++ seeding trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// k-means++ then Lloyd trials.
    #[arg(long, default_value_t = 100)]
    lloyd_trials: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// separated, robust, perceptron, cone or aps.
    #[arg(long)]
    suite: String,
    /// Number of seeded cases.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    /// Seed of case 0.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    config::init_logging(&cli.log);
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(bench::exit_code(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> stablekm::Result<i32> {
    let overrides = ConfigOverrides {
        lloyd_tol: cli.lloyd_tol,
        lloyd_max_iter: cli.lloyd_max_iter,
        sweep_memory_mode: cli.memory_mode,
        perceptron_budget: cli.budget,
        thread_width: cli.threads,
    };
    let cfg = config::load_config(cli.config.as_deref(), &overrides)?;
    if cfg.thread_width > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.thread_width).build_global() {
            warn!("thread pool already configured: {e}");
        }
    }
    let command: Vec<String> = std::env::args().skip(1).collect();
    let mut report = RunReport::new(command, cfg.clone());
    let mut timings = Timings::default();
    let out_dir = cli.out_dir;
    let mut code = 0;
    match cli.command {
        Command::Config => {
            emit(&cfg.to_toml_string());
            return Ok(0);
        }
        Command::Datasets => {
            let dir = datasets::data_dir();
            emit(&format!("data directory: {} (set {})\n", dir.display(), datasets::DATA_DIR_ENV));
            for spec in datasets::registry() {
                let path = datasets::dataset_path(&spec, &dir);
                let state = if path.is_file() { "present" } else { "missing" };
                emit(&format!("  {:<10} {:<8} {}  ({})\n", spec.name, state, path.display(), spec.source_note));
            }
            return Ok(0);
        }
        Command::Cluster(args) => {
            fs::create_dir_all(&out_dir)?;
            let inst = bench::load_dataset(&args.data.dataset, args.data.normalize)?;
            let k = match args.k {
                Some(k) => k,
                None if inst.label_count() > 0 => inst.label_count(),
                None => return Err(Error::InvalidParameter("--k is required for unlabeled data".into())),
            };
            let reference =
                match inst.labels() {
                    Some(_) => Some(timings.time("ground_truth", || {
                        datasets::ground_truth_lloyd(&inst, cfg.lloyd_tol, cfg.lloyd_max_iter)
                    })?),
                    None => None,
                };
            let opts =
                RunOptions { k, seed: args.seed, trials: args.trials, r: args.r, t: args.t, max_pairs: args.max_pairs };
            let label = format!("{}/{}", inst.name(), args.algo);
            let (mut row, c) =
                timings.time(label, || bench::cluster_row(&inst, args.algo, &opts, &cfg, reference.as_ref()))?;
            bench::emit_clustering(&out_dir, &format!("{}-{}", inst.name(), args.algo), &mut row, &c)?;
            report.rows.push(row);
        }
        Command::Stability(args) => {
            fs::create_dir_all(&out_dir)?;
            let inst = bench::load_dataset(&args.data.dataset, args.data.normalize)?;
            let row = timings.time(format!("{}/stability", inst.name()), || {
                bench::stability_row(&inst, &args.eta, &args.eps, &cfg)
            })?;
            report.stability.push(row);
        }
        Command::Bench(args) => {
            fs::create_dir_all(&out_dir)?;
            let opts = BenchOptions { seed: args.seed, seeding_trials: args.trials, lloyd_trials: args.lloyd_trials };
            let clusterings = bench::bench(&mut report, &mut timings, opts)?;
            for (row, (stem, c)) in report.rows.iter_mut().zip(&clusterings) {
                bench::emit_clustering(&out_dir, stem, row, c)?;
            }
        }
        Command::Synth(args) => {
            fs::create_dir_all(&out_dir)?;
            let suite: Suite = args.suite.parse()?;
            let r = timings.time(suite.name(), || suites::run_suite(suite, args.seeds, args.seed));
            if !r.passed() {
                code = bench::EXIT_PROPERTY_FAILURE;
            }
            report.suites.push(r);
        }
    }
    emit(&bench::render_text(&report, &timings));
    write_outputs(&out_dir, &report, &timings)?;
    Ok(code)
}

fn write_outputs(dir: &Path, report: &RunReport, timings: &Timings) -> stablekm::Result<()> {
    bench::write_report(&dir.join("report.json"), report)?;
    bench::write_timings(&dir.join("timings.json"), timings)?;
    emit(&format!("\nreport written to {}\n", dir.join("report.json").display()));
    Ok(())
}

/// Stdout write that tolerates a closed pipe (`| head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
