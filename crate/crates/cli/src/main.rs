//! `covqcs` experiment harness.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covqcs::bounds::BoundInputs;
use covqcs::channel::bsc_capacity;
use covqcs::harness::{
    bound_csv, evaluate_nmse, load_system, records_csv, run_point, run_sweep, save_system, sensing_model,
    stats_csv, train_system, ExperimentConfig, PointOutcome, PointResult, Scheme, SweepConfig,
};
use covqcs::io::parse_matrix_csv;
use covqcs::model::mutual_coherence;
use covqcs::Error;

#[derive(Parser)]
#[command(name = "covqcs", version, about = "Channel-optimized VQ of compressed-sensing measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single-stage source-domain quantizer (covq-cs).
    TrainCovq(TrainArgs),
    /// Train a multi-stage source-domain quantizer (comsvq-cs).
    TrainMsvq(TrainArgs),
    /// Train the measurement-domain baseline (nnc-cs).
    TrainNnc(TrainArgs),
    /// Train the multi-stage measurement-domain baseline (msnnc-cs).
    TrainMsnnc(TrainArgs),
    /// Evaluate the NMSE of one configuration or of a saved system.
    Eval(EvalArgs),
    /// Train and evaluate every point of a sweep file.
    Sweep(SweepArgs),
    /// Write a lower-bound curve as CSV.
    Bound(BoundArgs),
    /// Print the mutual coherence of a sensing matrix.
    Coherence(CoherenceArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment TOML; its scheme is replaced by the subcommand's.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the manifest, matrix, codebooks and training trace.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Experiment TOML to train and evaluate.
    #[arg(long, required_unless_present = "system", conflicts_with = "system")]
    config: Option<PathBuf>,
    /// Directory written by a train subcommand.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Record CSV to write; a `.stats.csv` sidecar goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Record CSV; a `.stats.csv` sidecar goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Fill the wall_seconds column (makes the file non-reproducible).
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Mutual coherence; required when sigma_w2 > 0 unless --matrix is given.
    #[arg(long)]
    mu: Option<f64>,
    /// Sensing-matrix CSV to take the coherence from.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    sigma_w2: f64,
    /// BSC crossover probability; sets the capacity.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    rate_min: f64,
    #[arg(long)]
    rate_max: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoherenceArgs {
    /// Sensing-matrix CSV; otherwise the matrix of --config is generated.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    matrix: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e.downcast_ref::<Error>() {
                Some(err) if !err.is_config() && !matches!(err, Error::Io(_)) => 2,
                _ => 1,
            };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(e).into())
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::Io)?;
    }
    fs::write(path, text).map_err(|e| Error::Io(e).into())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".stats.csv");
    PathBuf::from(s)
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::TrainCovq(a) => train(a, Scheme::CovqCs),
        Command::TrainMsvq(a) => train(a, Scheme::ComsvqCs),
        Command::TrainNnc(a) => train(a, Scheme::NncCs),
        Command::TrainMsnnc(a) => train(a, Scheme::MsnncCs),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Bound(a) => bound(a),
        Command::Coherence(a) => coherence(a),
    }
}

fn train(a: TrainArgs, scheme: Scheme) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(&read(&a.config)?)?;
    if cfg.scheme != scheme {
        eprintln!("note: scheme {} replaced by {scheme}", cfg.scheme);
        cfg.scheme = scheme;
        if !scheme.is_multistage() {
            cfg.stage_rates = None;
            cfg.stage_epsilons = None;
        }
        cfg.validate()?;
    }
    let sys = train_system(&cfg, None)?;
    save_system(&a.out, &sys)?;
    match sys.report.final_distortion() {
        Some(d) => println!("trained {scheme}: final training distortion {d}"),
        None => println!("trained {scheme}"),
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let outcome = match (&a.config, &a.system) {
        (Some(path), _) => {
            let cfg = ExperimentConfig::from_toml(&read(path)?)?;
            let (_, result) = run_point(&cfg, None)?;
            outcome(cfg, result)
        }
        (None, Some(dir)) => {
            let sys = load_system(dir)?;
            let t = std::time::Instant::now();
            let eval = evaluate_nmse(&sys)?;
            let result = PointResult {
                eval,
                train_distortion: None,
                train_monotone: true,
                train_seconds: 0.0,
                eval_seconds: t.elapsed().as_secs_f64(),
            };
            outcome(sys.config, result)
        }
        (None, None) => unreachable!("clap requires one of --config and --system"),
    };
    if let Ok(r) = &outcome.result {
        let e = &r.eval;
        println!(
            "{}: NMSE {:.4} dB (+/- {:.4} linear stderr over {} samples), D_cs {:.4} dB",
            outcome.scheme,
            e.nmse_db,
            e.nmse.stderr,
            e.n_eval,
            covqcs::harness::experiment::to_db(e.d_cs.mean / outcome.config.as_ref().unwrap().k as f64)
        );
    }
    if let Some(out) = &a.out {
        let all = [outcome];
        write(out, &records_csv(&all, a.wall_clock))?;
        write(&sidecar(out), &stats_csv(&all))?;
    }
    Ok(())
}

fn outcome(cfg: ExperimentConfig, result: PointResult) -> PointOutcome {
    PointOutcome {
        scheme: cfg.scheme,
        value: f64::NAN,
        config: Some(cfg),
        result: Ok(result),
    }
}

fn sweep(a: SweepArgs) -> anyhow::Result<()> {
    let cfg = SweepConfig::from_toml(&read(&a.config)?)?;
    let outcomes = run_sweep(&cfg, |o| match &o.result {
        Ok(r) => eprintln!(
            "{} {:?}={}: {:.3} dB ({:.1}s)",
            o.scheme,
            cfg.axis,
            o.value,
            r.eval.nmse_db,
            r.train_seconds + r.eval_seconds
        ),
        Err(e) => eprintln!("{} {:?}={}: failed: {e}", o.scheme, cfg.axis, o.value),
    });
    write(&a.out, &records_csv(&outcomes, a.wall_clock))?;
    write(&sidecar(&a.out), &stats_csv(&outcomes))?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    println!("{} points, {failed} failed; wrote {}", outcomes.len(), a.out.display());
    Ok(())
}

fn bound(a: BoundArgs) -> anyhow::Result<()> {
    let mu = match (a.mu, &a.matrix) {
        (Some(mu), _) => mu,
        (None, Some(path)) => mutual_coherence(&parse_matrix_csv(&read(path)?)?.0)?,
        (None, None) if a.sigma_w2 == 0.0 => 0.0,
        (None, None) => return Err(Error::Config("--mu or --matrix is required when sigma_w2 > 0".into()).into()),
    };
    if !(a.step > 0.0) || !(a.rate_max >= a.rate_min) {
        return Err(Error::Config("need step > 0 and rate_max >= rate_min".into()).into());
    }
    if !(0.0..=0.5).contains(&a.epsilon) {
        return Err(Error::Config(format!("epsilon {} outside [0, 0.5]", a.epsilon)).into());
    }
    let count = ((a.rate_max - a.rate_min) / a.step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::Config("rate grid too large".into()).into());
    }
    let rates: Vec<f64> = (0..count).map(|i| a.rate_min + i as f64 * a.step).collect();
    let template = BoundInputs {
        n: a.n,
        k: a.k,
        mu,
        sigma_w2: a.sigma_w2,
        rate_bits: a.rate_min,
        capacity: bsc_capacity(a.epsilon),
    };
    let csv = bound_csv(&template, &rates)?;
    match &a.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn coherence(a: CoherenceArgs) -> anyhow::Result<()> {
    let phi = match (&a.matrix, &a.config) {
        (Some(path), _) => parse_matrix_csv(&read(path)?)?.0,
        (None, Some(path)) => sensing_model(&ExperimentConfig::from_toml(&read(path)?)?)?.phi().clone(),
        (None, None) => unreachable!("clap requires one of --matrix and --config"),
    };
    println!("{:.6}", mutual_coherence(&phi)?);
    Ok(())
}
