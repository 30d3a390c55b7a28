mod args;
mod commands;
mod config;
mod exit;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use exit::{classify, CliError, ExitKind};

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new(ExitKind::Config, "--threads must be positive").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(ExitKind::Other, format!("thread pool: {e}")))?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let fmt = cli.output_format;
    match &cli.command {
        Command::Gen(a) => commands::gen(a, &mut std::io::stderr())?,
        Command::PrepRatings(a) => commands::prep_ratings(a, &mut std::io::stderr())?,
        Command::Build(a) => commands::build(a, &mut std::io::stderr())?,
        Command::Search(a) => commands::search(a, fmt, &mut out)?,
        Command::Bench(a) => commands::bench(a, fmt, &mut out)?,
        Command::Verify(a) => {
            if !commands::verify(a, fmt, &mut out)? {
                out.flush()?;
                eprintln!("error: bound verification failed");
                return Ok(ExitCode::from(ExitKind::Other as u8));
            }
        }
        Command::Cost(a) => commands::cost(a, fmt, &mut out)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.kind as u8);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitKind::Usage as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
