//! Command-line front end for `lbaudit`.
//!
//! [`execute`] runs a parsed [`cli::Cli`] and writes its files;
//! [`exit_code`] maps failures to the documented exit statuses.

pub mod cli;
pub mod commands;
pub mod config;
pub mod report;

use anyhow::{Context as _, Result};
use lbaudit::ErrorKind;

use crate::cli::{Cli, Command, OutputFormat};
use crate::commands::{Output, RunContext};

/// Runs the command without touching the file system beyond reading inputs.
pub fn run(cli: &Cli) -> Result<(Output, Option<std::path::PathBuf>)> {
    let ctx = RunContext::new(&cli.global)?;
    let out_dir = ctx.output_dir().map(ToOwned::to_owned);
    let output = match &cli.command {
        Command::Audit(a) => commands::audit(ctx, a)?,
        Command::Corr(a) => commands::corr(ctx, a)?,
        Command::Aggregate(a) => commands::aggregate_cmd(ctx, a)?,
        Command::Compare(a) => commands::compare(ctx, a)?,
        Command::SimulateReuse(a) => commands::simulate_reuse(ctx, a)?,
        Command::Report(a) => commands::report(ctx, a)?,
    };
    Ok((output, out_dir))
}

/// Runs the command, writes output files and returns what belongs on stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let (output, out_dir) = run(cli)?;
    if let Some(dir) = out_dir {
        commands::ensure_dir(&dir)?;
        for (name, contents) in &output.files {
            let path = dir.join(name);
            std::fs::write(&path, contents)
                .map_err(lbaudit::Error::from)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(match cli.global.format {
        OutputFormat::Json => output.report.to_json(),
        OutputFormat::Csv => output.csv,
        OutputFormat::Text => output.report.to_text(),
    })
}

/// 2 for input, schema and configuration problems, 3 for computations that
/// are undefined on otherwise valid input.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<lbaudit::Error>() {
            return match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Computation => 3,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return 2;
        }
    }
    3
}
