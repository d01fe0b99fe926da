use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hrmt::harness::{self, ExperimentConfig, ExperimentKind, RunManifest};
use hrmt::oracle::{self, OracleResult, ReferenceProcess};
use hrmt::{Error, Result};

#[derive(Parser)]
#[command(name = "hrmt", version, about = "Hierarchical random matrix laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config file.
    Run(RunArgs),
    Sample(RunArgs),
    Spectrum(RunArgs),
    PoissonTest(RunArgs),
    GapRatioSweep(RunArgs),
    Localization(RunArgs),
    DbmStability(RunArgs),
    RpTest(RunArgs),
    IdentityCheck(RunArgs),
    WegnerMinami(RunArgs),
    /// Check a config and print it with defaults filled.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the checksums recorded in a run manifest.
    Verify {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Reference computations (debugging aid).
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "HRMT_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Process {
    ExponentialGaps,
    GoeSmall,
    Arithmetic,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Hierarchical distance by explicit partition enumeration.
    Distance {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
    },
    /// Closed-form eigenvalues of [[a, b], [b, d]].
    Eig2 {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Term-by-term variance profile (row-major).
    VarianceProfile {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        unnormalized: bool,
    },
    /// Monte Carlo gap ratio of a reference process.
    GapRatio {
        #[arg(long, value_enum)]
        process: Process,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    harness::validate_config(&std::fs::read_to_string(path)?)
}

fn run(kind: Option<ExperimentKind>, args: RunArgs) -> Result<bool> {
    let mut config = load_config(&args.config)?;
    if let Some(kind) = kind {
        config.experiment = kind;
        // re-check experiment-specific constraints
        config = harness::validate_config(&serde_json::to_string(&config)?)?;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(w) = args.workers {
        config.workers = w.max(1);
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    let manifest = harness::run(&config)?;
    for f in &manifest.outputs {
        println!("{}", config.output_dir.join(&f.path).display());
    }
    for failure in &manifest.failures {
        eprintln!("FAIL {failure}");
    }
    Ok(manifest.failures.is_empty())
}

fn oracle(which: OracleCommand) -> OracleResult {
    match which {
        OracleCommand::Distance { n, x, y } => OracleResult {
            name: "partition_distance".into(),
            inputs: json!({"n": n, "x": x, "y": y}),
            values: vec![oracle::partition_distance_oracle(n, x, y) as f64],
            method: "explicit nested partitions".into(),
        },
        OracleCommand::Eig2 { a, b, d } => {
            let (lo, hi) = oracle::eig2_oracle(a, b, d);
            OracleResult {
                name: "eig2".into(),
                inputs: json!({"a": a, "b": b, "d": d}),
                values: vec![lo, hi],
                method: "closed form".into(),
            }
        }
        OracleCommand::VarianceProfile { n, c, unnormalized } => OracleResult {
            name: "variance_profile".into(),
            inputs: json!({"n": n, "c": c, "normalized": !unnormalized}),
            values: oracle::variance_profile_oracle(n, c, !unnormalized),
            method: "term-by-term level sum".into(),
        },
        OracleCommand::GapRatio { process, samples, seed } => {
            let p = match process {
                Process::ExponentialGaps => ReferenceProcess::ExponentialGaps,
                Process::GoeSmall => ReferenceProcess::GoeSmall,
                Process::Arithmetic => ReferenceProcess::Arithmetic,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            OracleResult {
                name: "reference_gap_ratio".into(),
                inputs: json!({"process": format!("{p:?}"), "samples": samples, "seed": seed}),
                values: vec![oracle::reference_gap_ratio(p, samples, &mut rng)],
                method: "Monte Carlo".into(),
            }
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let kind = |k| Some(k);
    match cli.command {
        Command::Run(a) => run(None, a),
        Command::Sample(a) => run(kind(ExperimentKind::Sample), a),
        Command::Spectrum(a) => run(kind(ExperimentKind::Spectrum), a),
        Command::PoissonTest(a) => run(kind(ExperimentKind::PoissonTest), a),
        Command::GapRatioSweep(a) => run(kind(ExperimentKind::GapRatioSweep), a),
        Command::Localization(a) => run(kind(ExperimentKind::Localization), a),
        Command::DbmStability(a) => run(kind(ExperimentKind::DbmStability), a),
        Command::RpTest(a) => run(kind(ExperimentKind::RpTest), a),
        Command::IdentityCheck(a) => run(kind(ExperimentKind::IdentityCheck), a),
        Command::WegnerMinami(a) => run(kind(ExperimentKind::WegnerMinami), a),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(true)
        }
        Command::Verify { dir } => {
            let bad = RunManifest::load(&dir)?.verify(&dir)?;
            for b in &bad {
                eprintln!("checksum mismatch: {b}");
            }
            if bad.is_empty() {
                Ok(true)
            } else {
                Err(Error::Format(format!("{} file(s) changed", bad.len())))
            }
        }
        Command::Oracle { which } => {
            println!("{}", serde_json::to_string_pretty(&oracle(which))?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match &e {
                Error::Config(list) => {
                    eprintln!("invalid configuration:");
                    for m in list {
                        eprintln!("  {m}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
