//! The `voxtrav` command-line pipeline: simulation, mapping, labelling,
//! dataset construction, training, inference and evaluation.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod temap;

use clap::Parser;

use args::{Cli, Command, GlobalArgs};
use config::PipelineConfig;
pub use error::{CliError, CliResult};

/// Configuration file first, then flags.
pub fn resolve_config(global: &GlobalArgs) -> CliResult<PipelineConfig> {
    let mut cfg = match &global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(r) = global.resolution {
        cfg.resolution = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads(global: &GlobalArgs) -> CliResult<()> {
    let threads = match (global.single_thread, global.threads) {
        (true, _) => Some(1),
        (false, Some(0)) => return Err(CliError::Usage("--threads must be at least 1".into())),
        (false, n) => n,
    };
    if let Some(n) = threads {
        // A pool built earlier in the same process keeps its size.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialised");
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    configure_threads(&cli.global)?;
    let cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Sim(a) => commands::sim(&cfg, a),
        Command::Map(a) => commands::map(&cfg, a),
        Command::Label(a) => commands::label(a),
        Command::Dataset(a) => commands::dataset(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Infer(a) => commands::infer(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 for usage errors, 2 for data or format errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
