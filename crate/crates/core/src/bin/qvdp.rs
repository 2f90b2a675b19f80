use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qvdp::cli::{exit_code, run_command};
use qvdp::config::RunConfig;

/// Driven quantum Van der Pol oscillator: Lindblad dynamics, spectra,
/// effective-model analytics and classical phase diagrams.
#[derive(Parser)]
#[command(name = "qvdp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (overrides QVDP_WORKERS and the config file;
    /// 0 = one per CPU).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of the full model plus P(phi).
    Steady(CommonArgs),
    /// Time evolution of expectation values.
    Evolve(CommonArgs),
    /// Emission spectrum via the quantum regression theorem.
    Spectrum(CommonArgs),
    /// Steady-state Wigner density.
    Wigner(CommonArgs),
    /// Closed-form effective model (single point or detuning sweep).
    Effective(CommonArgs),
    /// Classical synchronization phase diagram over (F, Delta).
    #[command(name = "classical-diagram")]
    ClassicalDiagram(CommonArgs),
    /// Effective-model scan over an (F, Delta) grid.
    Scan(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Evolve(_) => "evolve",
            Command::Spectrum(_) => "spectrum",
            Command::Wigner(_) => "wigner",
            Command::Effective(_) => "effective",
            Command::ClassicalDiagram(_) => "classical-diagram",
            Command::Scan(_) => "scan",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Steady(a)
            | Command::Evolve(a)
            | Command::Spectrum(a)
            | Command::Wigner(a)
            | Command::Effective(a)
            | Command::ClassicalDiagram(a)
            | Command::Scan(a) => a,
        }
    }
}

fn worker_count(args: &CommonArgs, cfg: &RunConfig) -> usize {
    if let Some(n) = args.workers {
        return n;
    }
    if let Ok(v) = std::env::var("QVDP_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            return n;
        }
    }
    cfg.resources.workers
}

fn main() -> ExitCode {
    qvdp::configure_blas();
    let cli = Cli::parse();
    let args = cli.command.args();
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qvdp: config error: {e}");
            return ExitCode::from(2);
        }
    };
    let workers = worker_count(args, &cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("qvdp: cannot build worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| run_command(cli.command.name(), &cfg, &args.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qvdp: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
