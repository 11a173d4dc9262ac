//! `rzl`: command-line front end for the resonance-method toolkit.
//!
//! Primary output (JSON or CSV) goes to stdout or `--out`; the provenance
//! header goes to stderr or `--provenance`. Exit status is 0 on success,
//! 2 when the inputs are refused by a precondition, and 1 otherwise.

mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;
use rzl_core::params::{ConfigFile, RawParams};
use serde::Serialize;

use crate::args::Cli;
use crate::commands::{Context, ZeroDbInfo};

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    config: Option<String>,
    params: RawParams,
    zero_db: Option<ZeroDbInfo>,
    threads: usize,
    /// Nothing in the CLI draws random numbers.
    seed: Option<u64>,
    started_unix: f64,
    elapsed_secs: f64,
    status: &'a str,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);

    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("rzl: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let config = match &cli.global.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("rzl: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => ConfigFile::default(),
    };
    let mut ctx = Context::new(cli.params.overrides(), config, cli.global.zero_db.clone(), cli.global.enum_cap);

    let result = commands::run(&cli.command, &mut ctx).and_then(|art| {
        output::emit(cli.global.out.as_deref(), &art.primary)?;
        for (path, bytes) in &art.side {
            output::write_atomic(path, bytes)?;
        }
        Ok(())
    });
    let (status, code) = match &result {
        Ok(()) => ("ok", ExitCode::SUCCESS),
        Err(e) if e.is_refusal() => ("refused", ExitCode::from(2)),
        Err(_) => ("error", ExitCode::from(1)),
    };
    if let Err(e) = &result {
        eprintln!("rzl: {e}");
    }

    let prov = Provenance {
        tool: "rzl",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        argv: std::env::args().collect(),
        config: cli.global.config.as_ref().map(|p| p.display().to_string()),
        params: ctx.raw,
        zero_db: ctx.zero_db_info.clone(),
        threads: rayon::current_num_threads(),
        seed: None,
        started_unix,
        elapsed_secs: started.elapsed().as_secs_f64(),
        status,
    };
    let header = serde_json::to_string(&prov).expect("provenance serializes");
    match &cli.global.provenance {
        Some(path) => {
            if let Err(e) = output::write_atomic(path, format!("{header}\n").as_bytes()) {
                eprintln!("rzl: cannot write provenance to {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None if !cli.global.quiet => eprintln!("{header}"),
        None => {}
    }
    code
}
