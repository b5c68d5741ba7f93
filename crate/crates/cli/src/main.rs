//! `hdea`: generate landscapes, run comparison experiments, summarise and plot them.

mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hdea_core::harness::{
    read_results_file, run_experiment_with, write_results_file, ComparisonStatus,
    ComparisonSummary, RunOptions,
};
use hdea_core::{assign_traits, generate_nk, summarize, Error, ExperimentConfig};

use crate::plot::PlotSpec;

/// Environment variable that overrides `master_seed` in experiment configs.
const SEED_ENV: &str = "HDEA_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "hdea",
    version,
    about = "Haploid-diploid vs haploid EA experiments on NK and RBNK landscapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an NK landscape file (plus a trait map for the RBNK task).
    GenLandscape(GenLandscapeArgs),
    /// Run an experiment grid described by a config file and write the results table.
    Run(RunArgs),
    /// Summarise a results table and test HD-EA against H-EA at each K.
    Compare(CompareArgs),
    /// Draw mean best fitness against K with max/min error bars as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Nk,
    Rbnk,
}

#[derive(clap::Args, Debug)]
struct GenLandscapeArgs {
    #[arg(long, value_enum, default_value = "nk")]
    task: TaskArg,
    /// Number of loci (traits).
    #[arg(long)]
    n: usize,
    /// Epistatic degree, at most n-1.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Network size; required for --task rbnk.
    #[arg(long)]
    r: Option<usize>,
    /// Connections per node, checked against r.
    #[arg(long, default_value_t = 2)]
    b: usize,
    /// Landscape output path.
    #[arg(long)]
    out: PathBuf,
    /// Trait map output path (rbnk only); defaults to `<out>.traits`.
    #[arg(long)]
    traits_out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Results table output path.
    #[arg(long, required_unless_present_any = ["dry_run", "emit_config"])]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of available processors.
    #[arg(long)]
    workers: Option<usize>,
    /// Print the grid size and evaluation budget, write nothing.
    #[arg(long)]
    dry_run: bool,
    /// Write the fully expanded config (after overrides) to this path.
    #[arg(long)]
    emit_config: Option<PathBuf>,
    /// Report each finished run on stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(clap::Args, Debug)]
struct CompareArgs {
    /// Results table written by `run`.
    #[arg(long)]
    results: PathBuf,
    /// Summary output path (TOML).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct PlotArgs {
    /// Summary written by `compare`.
    #[arg(long)]
    summary: PathBuf,
    /// SVG output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenLandscape(args) => gen_landscape(args),
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Plot(args) => plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Rewrites parameter errors so they name the offending command-line flag.
fn flag_error(err: Error) -> anyhow::Error {
    match err {
        Error::Parameter { name, reason } => {
            anyhow::anyhow!("--{}: {reason}", name.replace('_', "-"))
        }
        other => other.into(),
    }
}

/// Writes through a sibling temporary file so a failed command leaves no partial output.
fn write_atomically(path: &Path, write: impl FnOnce(&Path) -> hdea_core::Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    write(&tmp)?;
    std::fs::rename(&tmp, path).with_context(|| format!("moving output into {}", path.display()))
}

fn gen_landscape(args: GenLandscapeArgs) -> Result<()> {
    let landscape = generate_nk(args.n, args.k, args.seed).map_err(flag_error)?;
    let traits = match args.task {
        TaskArg::Nk => None,
        TaskArg::Rbnk => {
            let Some(r) = args.r else {
                bail!("--r: required for --task rbnk");
            };
            if args.b == 0 || args.b > r {
                bail!("--b: must satisfy 1 <= b <= r = {r}");
            }
            Some(assign_traits(r, args.n, args.seed).map_err(flag_error)?)
        }
    };
    write_atomically(&args.out, |p| landscape.write_file(p))?;
    if let Some(traits) = traits {
        let path = args.traits_out.unwrap_or_else(|| {
            let mut p = args.out.as_os_str().to_owned();
            p.push(".traits");
            PathBuf::from(p)
        });
        write_atomically(&path, |p| traits.write_file(p))?;
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::read_file(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        config.master_seed = seed
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={seed:?} is not a 64-bit unsigned integer"))?;
    }
    config.validate().map_err(|e| match e {
        Error::Parameter { name, reason } => anyhow::anyhow!("config field `{name}`: {reason}"),
        other => other.into(),
    })?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    if args.dry_run {
        let mut out = std::io::stdout().lock();
        writeln!(out, "task: {}", config.task)?;
        writeln!(
            out,
            "grid: {} k values x {} landscapes x {} runs x {} algorithms = {} runs",
            config.k_sweep.len(),
            config.landscapes,
            config.runs_per_landscape,
            config.algorithms.len(),
            config.grid_size()
        )?;
        for &algorithm in &config.algorithms {
            writeln!(
                out,
                "{}: {} generations, {} evaluations per run",
                algorithm,
                config.generations_for(algorithm),
                config.run_evaluations(algorithm)
            )?;
        }
        writeln!(out, "total evaluations: {}", config.total_evaluations())?;
        return Ok(());
    }
    if let Some(path) = &args.emit_config {
        std::fs::write(path, config.to_toml())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let Some(out) = args.out else {
        return Ok(());
    };

    let total = config.grid_size();
    let done = AtomicUsize::new(0);
    let progress = |o: &hdea_core::harness::RunOutcome| {
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        let r = &o.record;
        eprintln!(
            "[{n}/{total}] k={} landscape={} run={} {}: best {:.6} after {} evaluations",
            r.k, r.landscape_id, r.run_id, r.algorithm, r.best_fitness, r.evaluations
        );
    };
    let options = RunOptions {
        workers: args.workers.unwrap_or(0),
        progress: args
            .verbose
            .then_some(&progress as &(dyn Fn(&hdea_core::harness::RunOutcome) + Sync)),
    };
    let outcomes = run_experiment_with(&config, &options).map_err(flag_error)?;
    let records: Vec<_> = outcomes.into_iter().map(|o| o.record).collect();
    write_atomically(&out, |p| write_results_file(&records, p))?;
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let records = read_results_file(&args.results)
        .with_context(|| format!("reading results {}", args.results.display()))?;
    let summary = summarize(&records)?;
    write_atomically(&args.out, |p| summary.write_file(p))?;

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>4}  {:>10}  {:>10}  {:>10}  {:>10}  verdict",
        "k", "HD-EA", "H-EA", "t", "p"
    )?;
    for c in &summary.comparisons {
        let mean = |a| {
            summary
                .cell(c.k, a)
                .map(|cell| format!("{:.5}", cell.mean))
                .unwrap_or_else(|| "-".into())
        };
        let verdict = match (c.status, c.better) {
            (ComparisonStatus::Compared, Some(better)) => format!("{} better", better.label()),
            (ComparisonStatus::Compared, None) => "no significant difference".into(),
            (ComparisonStatus::Skipped, _) => "skipped (fewer than 2 runs)".into(),
            (ComparisonStatus::Incomparable, _) => "incomparable".into(),
        };
        let num = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:>4}  {:>10}  {:>10}  {:>10}  {:>10}  {verdict}",
            c.k,
            mean(hdea_core::Algorithm::Hdea),
            mean(hdea_core::Algorithm::Hea),
            num(c.t),
            num(c.p)
        )?;
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let summary = ComparisonSummary::read_file(&args.summary)
        .with_context(|| format!("reading summary {}", args.summary.display()))?;
    if summary.cells.is_empty() {
        bail!("{}: summary has no cells to plot", args.summary.display());
    }
    let title = args
        .title
        .unwrap_or_else(|| format!("{} best fitness by K", summary.task.as_str().to_uppercase()));
    let Some(spec) = PlotSpec::from_summary(&summary, &title) else {
        bail!(
            "{}: every plotted algorithm needs a cell at every K",
            args.summary.display()
        );
    };
    let svg = spec.render();
    write_atomically(&args.out, |p| {
        std::fs::write(p, &svg).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })
    })
}
