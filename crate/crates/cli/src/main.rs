//! `vcrop`: smoothing, analysis, evaluation and rendering of 9:16 crop
//! annotations, plus the annotation server.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "vcrop", version, about = "Portrait-crop annotation toolkit")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Refine raw annotations with the motion-compensated temporal filter.
    Smooth(commands::smooth::Args),
    /// Dataset statistics: dispersion, box area, outliers, consistency, content diversity.
    Analyze(commands::analyze::Args),
    /// Compare predictions with ground truth (m_IoU, IoU@R, smoothness, saliency agreement).
    Evaluate(commands::evaluate::Args),
    /// Crop and resize videos into portrait tubes following their tracks.
    Render(commands::render::Args),
    /// Detect scene cuts and write a scene list file.
    Scenes(commands::scenes::Args),
    /// Run the annotation session server.
    Serve(commands::serve::Args),
    /// Write a synthetic fixture set: videos, noisy tracks and ground truth.
    Synth(commands::synth::Args),
}

/// Invalid invocation or configuration; exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Inputs that are well-formed but inconsistent; exit code 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("{what} '{}' is not a file", path.display())).into());
    }
    Ok(())
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(UsageError(format!("{what} '{}' is not a directory", path.display())).into());
    }
    Ok(())
}

/// The parent of an output file must exist.
pub fn require_output(path: &Path) -> Result<PathBuf> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(UsageError(format!("output directory '{}' does not exist", parent.display())).into());
    }
    Ok(path.to_path_buf())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<DataError>() || cause.is::<vcrop_core::Error>() || cause.is::<vcrop_server::ServerError>() {
            return 2;
        }
    }
    3
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    match cli.command {
        // the server owns its own runtime and blocking pool
        Command::Serve(args) => commands::serve::run(args),
        command => vcrop_core::exec::with_threads(threads, move || match command {
            Command::Smooth(a) => commands::smooth::run(a),
            Command::Analyze(a) => commands::analyze::run(a),
            Command::Evaluate(a) => commands::evaluate::run(a),
            Command::Render(a) => commands::render::run(a),
            Command::Scenes(a) => commands::scenes::run(a),
            Command::Synth(a) => commands::synth::run(a),
            Command::Serve(_) => unreachable!(),
        })?,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(exit_code(&UsageError("x".into()).into()), 1);
        let data: anyhow::Error = vcrop_core::Error::EmptyTrack.into();
        assert_eq!(exit_code(&data.context("while smoothing")), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("boom")), 3);
    }
}
