use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffraction_lab::cli::{self, Command, ExperimentConfig, OUT_DIR_ENV};
use diffraction_lab::{Error, ErrorCategory};

#[derive(Parser)]
#[command(name = "diffraction-lab", version, about = "Diffraction and dynamical spectrum experiments on point sets")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Worker threads (outputs do not depend on it).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Write the realization on the largest box.
    Generate(Common),
    /// Autocorrelation estimate and convergence table.
    Autocorr(Common),
    /// Diffraction profile, classified peaks and pure-point ratio.
    Diffract(Common),
    /// Eigen-averages and the spectral-mass identity check.
    Spectral(Common),
    /// Almost periods of a sampled correlation.
    Almostper(Common),
    /// Perturbation experiment report.
    Perturb(Common),
    /// Averaging-sequence diagnostics.
    Vanhove(Common),
}

fn execute(cmd: Command, common: &Common) -> Result<Vec<PathBuf>, Error> {
    let cfg = ExperimentConfig::load(&common.config)?;
    let threads = common.threads.or(cfg.output.threads);
    if threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let out = cli::resolve_out_dir(common.out.as_deref(), &cfg);
    pool.install(|| cli::run(cmd, &cfg, &out))
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (cmd, common) = match &args.command {
        Sub::Generate(c) => (Command::Generate, c),
        Sub::Autocorr(c) => (Command::Autocorr, c),
        Sub::Diffract(c) => (Command::Diffract, c),
        Sub::Spectral(c) => (Command::Spectral, c),
        Sub::Almostper(c) => (Command::AlmostPer, c),
        Sub::Perturb(c) => (Command::Perturb, c),
        Sub::Vanhove(c) => (Command::VanHove, c),
    };
    let level = if common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cmd, common) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let cat: ErrorCategory = e.category();
            eprintln!("error[{}]: {e}", cat.as_str());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
