//! The `segsim` command line: simulation, transient analysis and benchmarks.

pub mod archive;
pub mod bench;
pub mod error;
pub mod simulate;
pub mod transient;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use segsim::{builtin, builtin_models, builtin_source, parse_model, serialize_model, CrnModel, Error};

pub use archive::{ArchiveHeader, ArchivedRun, Method, RunArchive};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "segsim",
    version,
    about = "Segmental simulation of chemical reaction networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and write an archive plus run statistics.
    Simulate(simulate::SimulateArgs),
    /// Transient histograms, EMD and time series from archives.
    Transient(transient::TransientArgs),
    /// Time SSA against segmental simulation over a grid of c and k.
    Bench(bench::BenchArgs),
    /// List the built-in models, or print one in canonical form.
    Models { name: Option<String> },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Transient(args) => transient::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Models { name } => models(name.as_deref()),
    }
}

fn models(name: Option<&str>) -> CliResult<()> {
    match name {
        Some(name) => {
            builtin_source(name).ok_or_else(|| CliError::Usage(format!("unknown built-in model `{name}`")))?;
            print!("{}", serialize_model(&builtin(name).expect("source exists")));
        }
        None => {
            for (name, m) in builtin_models() {
                println!(
                    "{name:<8} {} species, {} reactions, t_end {}",
                    m.species_count(),
                    m.reactions.len(),
                    m.t_end
                );
            }
        }
    }
    Ok(())
}

/// Resolves `--model`: a built-in name, otherwise a `.crn` file path.
pub fn load_model(spec: &str) -> CliResult<CrnModel> {
    if let Some(m) = builtin(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "`{spec}` is neither a built-in model nor a readable file"
        )));
    }
    let text = error::read_input(path)?;
    parse_model(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Maps a library error onto the CLI's exit-code classes.
pub fn core_error(e: Error) -> CliError {
    match e {
        Error::Model(_) | Error::Syntax { .. } | Error::Format(_) => CliError::Format(e.to_string()),
        Error::NotEnabled(_) | Error::PartitionParameter(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    Ok(dir.to_path_buf())
}

/// Default ensemble size: 10,000 runs for PP and VI, 1,000 otherwise.
pub fn default_runs(model: &CrnModel) -> usize {
    match model.name.as_str() {
        "PP" | "VI" => 10_000,
        _ => 1_000,
    }
}
