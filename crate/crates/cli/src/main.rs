use std::process::ExitCode;

use clap::Parser;

use rqfractal_cli::config::{Cli, JobConfig};
use rqfractal_cli::io::write_atomic;
use rqfractal_cli::jobs::run;
use rqfractal_cli::{CliError, ExitKind};

fn finish(config: &JobConfig) -> Result<ExitKind, CliError> {
    let outcome = run(config);
    if let (Some(path), Some(table)) = (&config.output, &outcome.table) {
        write_atomic(path, table)?;
    }
    if let Some(path) = &config.report {
        let mut text = serde_json::to_string_pretty(&outcome.report)?;
        text.push('\n');
        write_atomic(path, &text)?;
    }
    if outcome.kind != ExitKind::Success {
        let detail = outcome
            .report
            .get("error")
            .and_then(|e| e.as_str())
            .map(str::to_owned);
        eprintln!(
            "rqfractal: {}{}",
            outcome.report["status"].as_str().unwrap_or("failed"),
            detail.map(|d| format!(": {d}")).unwrap_or_default()
        );
    }
    Ok(outcome.kind)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = JobConfig::try_from(cli)
        .and_then(|c| finish(&c))
        .unwrap_or_else(|e| {
            eprintln!("rqfractal: {e}");
            e.exit_kind()
        });
    ExitCode::from(kind as u8)
}
