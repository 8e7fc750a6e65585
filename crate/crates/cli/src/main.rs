//! `oudisp`: batch front end for the oudisp numerical toolkit.

mod commands;
mod config;
mod failure;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, Engine, Format, RunConfig};
use failure::Failure;

const THREADS_VAR: &str = "OU_DISPERSION_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "oudisp",
    version,
    about = "Run oudisp experiments from a TOML config"
)]
struct Cli {
    /// Pipeline to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path (standard output when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Propagation engine.
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Seed for randomized scans.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Suppress the summary on standard error.
    #[arg(long)]
    quiet: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::invalid("--config", format!("{}: {e}", path.display())))?;
            let mut cfg = RunConfig::parse(&text)?;
            if let Some(c) = cli.command {
                cfg.command = c;
            }
            cfg
        }
        None => match cli.command {
            Some(c) => RunConfig::new(c),
            None => return Err(Failure::invalid("command", "give a subcommand or --config")),
        },
    };
    if let Some(p) = &cli.output {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(e) = cli.engine {
        cfg.engine = e;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::invalid(THREADS_VAR, format!("{raw:?} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::invalid(THREADS_VAR, e.to_string()))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    init_threads()?;
    let cfg = load(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let outcome = commands::run(&cfg)?;
    let report_path = cfg.output.path.as_deref();
    for (name, field) in &outcome.fields {
        commands::save_field(&commands::field_path(report_path, name), field)?;
    }
    match report_path {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(file);
            outcome.report.write(cfg.output.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            outcome.report.write(cfg.output.format, stdout.lock())?;
        }
    }
    if !cli.quiet {
        eprintln!(
            "{}: {} rows, {} field files",
            cfg.command.name(),
            outcome.report.rows.len(),
            outcome.fields.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are validation failures.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
