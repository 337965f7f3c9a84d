//! Command-line driver: direct matrix design, projection design against a
//! dictionary, single baseline runs, and the two config-driven benchmark
//! sweeps.
//!
//! Exit codes: 0 on success, 1 for configuration/input errors, 2 for
//! numerical failures inside a solver (the failing cell is named on
//! stderr).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lowcoh::bench::{self, derive_seed, OutputFormat};
use lowcoh::{
    baselines, dmcm_design, dmcmp_continuation, mutual_coherence, normalize_columns, welch_bound,
    AmSchedule, ContinuationSchedule, DenseMatrix, Dictionary, EladParams, Error, XuParams,
};

#[derive(Parser)]
#[command(
    name = "lowcoh",
    version,
    about = "Sensing-matrix design by direct mutual coherence minimization, with baselines and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design an m x n matrix of low mutual coherence.
    Dmcm(DmcmArgs),
    /// Jointly design a projection P and target M for a fixed dictionary.
    #[command(name = "dmcm-p")]
    DmcmP(DmcmPArgs),
    /// Run one prior projection-design method on a dictionary.
    Baseline(BaselineArgs),
    /// Coherence sweep over a scheme of (m, n[, d]) points from a TOML config.
    CoherenceBench(CoherenceBenchArgs),
    /// Compressed-sensing recovery sweep from a TOML config.
    CsBench(CsBenchArgs),
}

#[derive(Args)]
struct ScheduleArgs {
    /// Initial smoothness parameter.
    #[arg(long, default_value_t = 0.5)]
    rho0: f64,
    /// Geometric decay factor applied each outer round.
    #[arg(long, default_value_t = 1.2)]
    eta: f64,
    /// Inner iterations per round.
    #[arg(long, default_value_t = 15)]
    inner: usize,
    /// Outer continuation rounds.
    #[arg(long, default_value_t = 1000)]
    outer: usize,
    /// Smallest smoothness parameter; rho stays there once reached.
    #[arg(long, default_value_t = 1e-6)]
    rho_floor: f64,
}

#[derive(Args)]
struct DmcmArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    sched: ScheduleArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the designed matrix here (text format).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DmcmPArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    sched: ScheduleArgs,
    /// Initial coupling weight.
    #[arg(long, default_value_t = 2.0)]
    beta0: f64,
    /// Smallest coupling weight.
    #[arg(long, default_value_t = 1e-6)]
    beta_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Load the dictionary from a text-format matrix file.
    #[arg(long, conflicts_with = "random_dict")]
    dict: Option<PathBuf>,
    /// Draw a seeded Gaussian dictionary (the default when --dict is absent).
    #[arg(long)]
    random_dict: bool,
    /// Write the projection matrix here (text format).
    #[arg(long)]
    out_p: Option<PathBuf>,
    /// Write the designed target matrix here (text format).
    #[arg(long)]
    out_m: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum BaselineMethod {
    Elad,
    Xu,
    Duarte,
    Random,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: BaselineMethod,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Shrink threshold (elad).
    #[arg(long, default_value_t = 0.2)]
    elad_t: f64,
    /// Down-scaling factor (elad).
    #[arg(long, default_value_t = 0.95)]
    elad_gamma: f64,
    /// Iteration count (elad, xu).
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Write the projection matrix here (text format).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoherenceBenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CsBenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the squared-error success threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

fn continuation_schedule(args: &ScheduleArgs) -> ContinuationSchedule {
    ContinuationSchedule {
        rho0: args.rho0,
        eta: args.eta,
        outer_iters: args.outer,
        rho_floor: args.rho_floor,
        inner_iters: args.inner,
        step_tol: None,
    }
}

fn load_or_random_dictionary(
    dict: &Option<PathBuf>,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<Dictionary, Error> {
    match dict {
        Some(path) => {
            let mat = DenseMatrix::read_text_file(path)?;
            if mat.rows() != d || mat.cols() != n {
                return Err(Error::Config(format!(
                    "dictionary file is {}x{}, expected {d}x{n}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            Dictionary::new(mat)
        }
        // Separate stream label so the dictionary draw never overlaps the
        // solver's own seeded draws.
        None => Dictionary::random_gaussian(d, n, derive_seed(seed, "dict", d, n, Some(d), None, 0, 0)),
    }
}

fn projected_coherence(p: &DenseMatrix, dict: &Dictionary) -> Result<f64, Error> {
    let effective = normalize_columns(&DenseMatrix::from_dmatrix(
        p.as_dmatrix() * dict.as_dmatrix(),
    )?)?;
    mutual_coherence(&effective)
}

fn run_dmcm(args: &DmcmArgs) -> Result<(), Error> {
    let sched = continuation_schedule(&args.sched);
    let (designed, trace) = dmcm_design(args.m, args.n, &sched, args.seed)?;
    let achieved = mutual_coherence(&designed)?;
    let welch = welch_bound(args.m, args.n)?;
    println!("m {}  n {}  seed {}", args.m, args.n, args.seed);
    println!("initial coherence   {}", trace.initial_f_exact);
    println!("achieved coherence  {achieved}");
    println!("best coherence seen {}", trace.best_f_exact);
    println!("welch bound         {welch}");
    if let Some(path) = &args.out {
        designed.as_dense().write_text_file(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_dmcmp(args: &DmcmPArgs) -> Result<(), Error> {
    let sched = AmSchedule {
        rho0: args.sched.rho0,
        beta0: args.beta0,
        eta: args.sched.eta,
        outer_iters: args.sched.outer,
        rho_floor: args.sched.rho_floor,
        beta_floor: args.beta_floor,
        inner_iters: args.sched.inner,
    };
    let dict = load_or_random_dictionary(&args.dict, args.d, args.n, args.seed)?;
    let (m, p, trace) = dmcmp_continuation(&dict, args.m, &sched, args.seed)?;
    let mu_m = mutual_coherence(&m)?;
    let mu_pd = projected_coherence(&p, &dict)?;
    let welch = welch_bound(args.m, args.n)?;
    println!("m {}  n {}  d {}  seed {}", args.m, args.n, args.d, args.seed);
    println!("coherence of M      {mu_m}");
    println!("coherence of P*D    {mu_pd}");
    println!(
        "coupling gap        {}",
        trace.final_coupling_gap.unwrap_or(f64::NAN)
    );
    println!("welch bound         {welch}");
    if let Some(path) = &args.out_p {
        p.write_text_file(path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.out_m {
        m.as_dense().write_text_file(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_baseline(args: &BaselineArgs) -> Result<(), Error> {
    let dict = load_or_random_dictionary(&args.dict, args.d, args.n, args.seed)?;
    let p = match args.method {
        BaselineMethod::Elad => {
            let params = EladParams {
                threshold: args.elad_t,
                down_scale: args.elad_gamma,
                iters: args.iters,
            };
            baselines::elad_projection(&dict, args.m, &params, args.seed)?
        }
        BaselineMethod::Xu => {
            baselines::xu_projection(&dict, args.m, &XuParams { iters: args.iters }, args.seed)?
        }
        BaselineMethod::Duarte => baselines::duarte_projection(&dict, args.m)?,
        BaselineMethod::Random => baselines::random_projection(args.m, args.d, args.seed)?,
    };
    let mu = projected_coherence(&p, &dict)?;
    let welch = welch_bound(args.m, args.n)?;
    println!("coherence of P*D    {mu}");
    println!("welch bound         {welch}");
    if let Some(path) = &args.out {
        p.write_text_file(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn emit_both_formats(
    records: &[bench::TrialRecord],
    histograms: &[bench::HistogramRecord],
    out_dir: &Path,
) -> Result<(), Error> {
    let mut written = bench::emit_results(records, histograms, OutputFormat::Csv, out_dir)?;
    written.extend(bench::emit_results(
        records,
        histograms,
        OutputFormat::Json,
        out_dir,
    )?);
    println!("{} records", records.len());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_coherence_bench(args: &CoherenceBenchArgs) -> Result<(), Error> {
    let cfg = bench::ExperimentConfig::from_toml_path(&args.config)?;
    let run = bench::run_coherence_experiment(&cfg)?;
    emit_both_formats(&run.trials, &run.histograms, &args.out_dir)
}

fn run_cs_bench(args: &CsBenchArgs) -> Result<(), Error> {
    let mut cfg = bench::ExperimentConfig::from_toml_path(&args.config)?;
    if let Some(trials) = args.trials {
        cfg.trials_per_point = trials;
    }
    if let Some(threshold) = args.threshold {
        cfg.success_threshold = threshold;
    }
    cfg.validate()?;
    let records = bench::run_cs_experiment(&cfg)?;
    emit_both_formats(&records, &[], &args.out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dmcm(args) => run_dmcm(args),
        Command::DmcmP(args) => run_dmcmp(args),
        Command::Baseline(args) => run_baseline(args),
        Command::CoherenceBench(args) => run_coherence_bench(args),
        Command::CsBench(args) => run_cs_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
