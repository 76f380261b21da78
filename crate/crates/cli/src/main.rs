use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use toml::Spanned;

use tfio_cli::config::{ExperimentConfig, TorusConfig};
use tfio_cli::output::{sha256_hex, write_all, Manifest};
use tfio_cli::{run, CliError, Job, Op};

#[derive(Parser)]
#[command(name = "tfio", version, about = "Time-frequency analysis of multilinear Fourier integral operators")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "tfio-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Short-time Fourier transform of the single configured input.
    Stft,
    /// Gabor frame checks.
    #[command(subcommand)]
    Gabor(GaborCmd),
    /// Multilinear Fourier integral operators on the line.
    #[command(subcommand)]
    Fio(FioCmd),
    /// Operators on the torus acting on trigonometric polynomials.
    #[command(subcommand)]
    Torus(TorusCmd),
    /// Numerical verification experiments.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Nested mixed norm of the Gabor matrix.
    Norm,
}

#[derive(Subcommand)]
enum GaborCmd {
    /// Frame bounds of the full lattice over the grid.
    CheckFrame(FrameArgs),
}

#[derive(Args)]
struct FrameArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// `gaussian` or `gaussian(a)`.
    #[arg(long)]
    window: Option<String>,
    /// Grid points.
    #[arg(long = "N")]
    points: Option<usize>,
    /// Grid half-width.
    #[arg(long = "R")]
    half_width: Option<f64>,
}

#[derive(Subcommand)]
enum FioCmd {
    /// Apply the operator to the configured inputs.
    Apply,
    /// Sampled distribution kernel.
    Kernel,
    /// Gabor matrix over the first truncation.
    Matrix,
}

#[derive(Subcommand)]
enum TorusCmd {
    /// Fourier coefficients of the output.
    Apply(CutoffArgs),
    /// Sampled kernel on the torus.
    Kernel(CutoffArgs),
}

#[derive(Args)]
struct CutoffArgs {
    /// Frequency cutoff F of the trigonometric inputs.
    #[arg(long)]
    cutoff: Option<usize>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Kernel STFT against symbol STFT at sampled points.
    StftRelation,
    /// Stability of sampled operator-norm ratios across lattice radii.
    Bound,
    /// Off-diagonal decay of the Gabor matrix of an FIO.
    DecayFio,
    /// Off-diagonal decay and growth for a bilinear pseudo-differential operator.
    DecayPdo,
}

fn op_of(c: &Command) -> Op {
    match c {
        Command::Stft => Op::Stft,
        Command::Gabor(GaborCmd::CheckFrame(_)) => Op::CheckFrame,
        Command::Fio(FioCmd::Apply) => Op::FioApply,
        Command::Fio(FioCmd::Kernel) => Op::FioKernel,
        Command::Fio(FioCmd::Matrix) => Op::FioMatrix,
        Command::Torus(TorusCmd::Apply(_)) => Op::TorusApply,
        Command::Torus(TorusCmd::Kernel(_)) => Op::TorusKernel,
        Command::Verify(VerifyCmd::StftRelation) => Op::VerifyStftRelation,
        Command::Verify(VerifyCmd::Bound) => Op::VerifyBound,
        Command::Verify(VerifyCmd::DecayFio) => Op::VerifyDecayFio,
        Command::Verify(VerifyCmd::DecayPdo) => Op::VerifyDecayPdo,
        Command::Norm => Op::Norm,
    }
}

fn apply_flags(cli: &Cli, config: &mut ExperimentConfig) {
    match &cli.command {
        Command::Gabor(GaborCmd::CheckFrame(a)) => {
            if let Some(v) = a.alpha {
                config.gabor.alpha = v;
            }
            if let Some(v) = a.beta {
                config.gabor.beta = v;
            }
            if let Some(w) = &a.window {
                config.gabor.window = Spanned::new(0..0, w.clone());
            }
            if let Some(n) = a.points {
                config.grid.points = n;
            }
            if let Some(r) = a.half_width {
                config.grid.half_width = r;
            }
        }
        Command::Torus(TorusCmd::Apply(a) | TorusCmd::Kernel(a)) => {
            if let Some(f) = a.cutoff {
                match &mut config.torus {
                    Some(t) => t.cutoff = f,
                    None => config.torus = Some(TorusConfig { cutoff: f, points: None }),
                }
            }
        }
        _ => {}
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let started = Instant::now();
    let op = op_of(&cli.command);
    let source = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })?,
        None => String::new(),
    };
    let mut config = ExperimentConfig::parse(&source)?;
    if let Some(name) = &config.operation {
        if name != op.name() {
            return Err(CliError::usage(format!("config is for `{name}` but the command is `{}`", op.name())));
        }
    }
    apply_flags(cli, &mut config);
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    config.seed = Some(seed);
    config.operation = Some(op.name().to_owned());

    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }

    let effective = config.to_toml();
    let config_sha256 = sha256_hex(effective.as_bytes());
    log::info!("{} seed={seed} config_sha256={config_sha256}", op.name());

    let outcome = run(op, &Job { config: &config, source: &source, seed })?;

    let version = env!("CARGO_PKG_VERSION");
    let line = format!("manifest.json config_sha256={config_sha256} seed={seed} tfio={version} op={}", op.stem());
    let manifest = Manifest {
        tool: "tfio",
        version,
        operation: op.name().to_owned(),
        seed,
        threads: cli.threads,
        config_sha256,
        config: effective,
        passed: outcome.passed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    };
    write_all(&cli.out, &outcome.artifacts, &line, manifest)?;
    for (name, _) in &outcome.artifacts {
        println!("{}", cli.out.join(name).display());
    }
    println!("{}: {}", op.name(), if outcome.passed { "pass" } else { "FAIL" });
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TFIO_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
