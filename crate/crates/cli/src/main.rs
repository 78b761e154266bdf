#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod record;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Experiment, Format, Overrides};
use record::{write_atomic, Recorder, ReportRecord};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "combfisher",
    version,
    about = "Quantum Fisher information of parametrized quantum combs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI of a rotated qubit state, checked against its closed form
    QfiState(Common),
    /// Channel QFI of a dephased qubit rotation, optimized over inputs
    QfiChannel(Common),
    /// Sensor QFIs of random combs against the phase-parallel bound
    Bound(Common),
    /// Shield/key comb: sequential versus phase-parallel QFI
    Protected(Common),
    /// Exact twirl against its Monte Carlo average
    TwirlCheck(Common),
    /// Grid maximum-likelihood estimation against the Cramér–Rao bound
    Estimate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment description; defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Report destination; standard output when absent
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Cap on worker threads
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::QfiState(c) => (Experiment::QfiState, c),
            Command::QfiChannel(c) => (Experiment::QfiChannel, c),
            Command::Bound(c) => (Experiment::Bound, c),
            Command::Protected(c) => (Experiment::Protected, c),
            Command::TwirlCheck(c) => (Experiment::TwirlCheck, c),
            Command::Estimate(c) => (Experiment::Estimate, c),
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("COMBFISHER_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

fn read_config(path: Option<&Path>) -> Result<String, String> {
    match path {
        None => Ok(String::new()),
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let (experiment, common) = cli.command.split();

    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("thread pool already initialized: {e}");
        }
    }

    let text = match read_config(common.config.as_deref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out,
        format: common.format,
    };
    let cfg = match parse_config(&text, experiment, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprint!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    log::info!("running {} with seed {:?}", cfg.experiment, cfg.seed);

    let start = Instant::now();
    let mut rec = Recorder::default();
    let details = match experiments::run(&cfg, &mut rec) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let record = ReportRecord::new(&cfg, rec, details, start.elapsed().as_secs_f64());
    log::debug!(
        "{} values, {} violations",
        record.values.len(),
        record.violations.len()
    );

    let bytes = match record.render(cfg.output.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let written = match &cfg.output.path {
        Some(path) => write_atomic(Path::new(path), &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(Into::into),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e:#}");
        return ExitCode::from(EXIT_RUNTIME);
    }

    if record.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in &record.violations {
            eprintln!("violation: {v}");
        }
        ExitCode::from(EXIT_VIOLATION)
    }
}
