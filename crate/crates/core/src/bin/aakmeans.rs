//! Command-line front end: `run`, `bench` and `gen`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 a run did not
//! converge within `--max-iters` under `--strict`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aakmeans::harness::{self, report, BenchRecord, RunSpec, SolverKind, SynthKind, SynthParams};
use aakmeans::{AAConfig, EmptyClusterPolicy, Engine, SeedKind, SolverConfig};

#[derive(Parser)]
#[command(
    name = "aakmeans",
    version,
    about = "Lloyd and Anderson-accelerated K-Means benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a dataset.
    Run(RunArgs),
    /// Run several solvers from identical initial centroids and compare them.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Naive,
    Bounded,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmptyArg {
    KeepPrevious,
    ReseedFarthest,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    GaussianMixture,
    Grid,
}

#[derive(Args)]
struct JobArgs {
    /// Dataset file (comma or whitespace separated, optional header).
    #[arg(long)]
    data: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// random, kmeanspp or file:PATH.
    #[arg(long, default_value = "kmeanspp", value_parser = parse_seed_kind)]
    init: SeedKind,
    /// Base seed; repetitions use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit comma-separated seeds, one per repetition.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 2)]
    m0: usize,
    #[arg(long, default_value_t = 30)]
    m_max: usize,
    #[arg(long, default_value_t = 0.02)]
    eps1: f64,
    #[arg(long, default_value_t = 0.5)]
    eps2: f64,
    /// Z-score every column before clustering.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "bounded")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "keep-previous")]
    empty_cluster: EmptyArg,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the per-iteration energy trace.
    #[arg(long)]
    trace: bool,
    /// Exit with status 3 if any run fails to converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "aa-dynamic", value_parser = parse_solver)]
    solver: SolverKind,
    #[command(flatten)]
    job: JobArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Solvers to compare; the first is the baseline.
    #[arg(long = "solver", value_delimiter = ',', default_value = "lloyd,aa-dynamic", value_parser = parse_solver)]
    solvers: Vec<SolverKind>,
    #[command(flatten)]
    job: JobArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "gaussian-mixture")]
    kind: KindArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    components: usize,
    #[arg(long, default_value_t = 10.0)]
    spread: f64,
    #[arg(long, default_value_t = 1.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seed_kind(s: &str) -> Result<SeedKind, String> {
    s.parse().map_err(|e: aakmeans::Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: aakmeans::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Data(String),
    NotConverged,
}

impl From<aakmeans::Error> for Failure {
    fn from(e: aakmeans::Error) -> Self {
        match e {
            aakmeans::Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn spec_for(solver: SolverKind, job: &JobArgs) -> Result<RunSpec, Failure> {
    let seeds = harness::seed_list(job.seed, job.reps, job.seeds.clone())?;
    Ok(RunSpec {
        dataset: job.data.clone(),
        k: job.k,
        solver,
        init: job.init.clone(),
        aa: AAConfig {
            m0: job.m0,
            m_max: job.m_max,
            eps1: job.eps1,
            eps2: job.eps2,
            ..AAConfig::default()
        },
        normalize: job.normalize,
        seeds,
        solver_cfg: SolverConfig {
            max_iters: job.max_iters,
            empty_cluster: match job.empty_cluster {
                EmptyArg::KeepPrevious => EmptyClusterPolicy::KeepPrevious,
                EmptyArg::ReseedFarthest => EmptyClusterPolicy::ReseedFarthest,
            },
            workers: job.workers,
            engine: match job.engine {
                EngineArg::Naive => Engine::Naive,
                EngineArg::Bounded => Engine::Bounded,
            },
            record_centroids: false,
        },
        trace: job.trace,
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_strict(strict: bool, records: &[BenchRecord]) -> Result<(), Failure> {
    if strict && records.iter().any(|r| !r.converged) {
        return Err(Failure::NotConverged);
    }
    Ok(())
}

fn note_normalization(job: &JobArgs) {
    eprintln!(
        "aakmeans: dataset {} (normalize = {})",
        job.data.display(),
        job.normalize
    );
}

fn run_cmd(args: RunArgs) -> Result<(), Failure> {
    let spec = spec_for(args.solver, &args.job)?;
    note_normalization(&args.job);
    let records = harness::run(&spec)?;
    let mut out = output(&args.job.out)?;
    match args.job.format {
        Format::Json => report::write_records_json(&records, &mut out)?,
        Format::Csv => report::write_records_csv(&records, &mut out)?,
    }
    out.flush()?;
    check_strict(args.job.strict, &records)
}

fn bench_cmd(args: BenchArgs) -> Result<(), Failure> {
    if args.solvers.len() < 2 {
        return Err(Failure::Usage("bench needs at least two solvers".into()));
    }
    let specs = args
        .solvers
        .iter()
        .map(|&s| spec_for(s, &args.job))
        .collect::<Result<Vec<_>, _>>()?;
    note_normalization(&args.job);
    let cmp = harness::bench_compare(&specs)?;
    for s in &cmp.summary {
        eprintln!(
            "aakmeans: {} vs {}: fewer iterations in {}/{} pairs, mean iteration reduction {:.1}%, mean time reduction {:.1}%, max relative MSE difference {:.2e}",
            s.solver,
            s.baseline,
            s.iter_wins,
            s.pairs,
            100.0 * s.mean_iter_reduction,
            100.0 * s.mean_time_reduction,
            s.max_rel_mse_diff
        );
    }
    let mut out = output(&args.job.out)?;
    match args.job.format {
        Format::Json => cmp.write_json(&mut out)?,
        Format::Csv => cmp.write_csv(&mut out)?,
    }
    out.flush()?;
    check_strict(args.job.strict, &cmp.records)
}

fn gen_cmd(args: GenArgs) -> Result<(), Failure> {
    let params = SynthParams {
        kind: match args.kind {
            KindArg::GaussianMixture => SynthKind::GaussianMixture,
            KindArg::Grid => SynthKind::Grid,
        },
        n: args.n,
        dim: args.d,
        components: args.components,
        spread: args.spread,
        jitter: args.jitter,
        seed: args.seed,
    };
    let synth = harness::gen_synthetic(&params)?;
    let mut out = output(&args.out)?;
    harness::write_dataset(&synth.data, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Gen(a) => gen_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("aakmeans: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("aakmeans: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged) => {
            eprintln!("aakmeans: a run did not converge within --max-iters");
            ExitCode::from(3)
        }
    }
}
