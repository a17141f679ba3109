mod args;
mod commands;
mod config;
mod output;
mod svg;

use std::fs;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use serde_json::json;

use args::{Cli, Command, Format};
use commands::CliError;

fn params(cmd: &Command) -> serde_json::Value {
    let v = match cmd {
        Command::Tail(a) => serde_json::to_value(a),
        Command::Exponent(a) => serde_json::to_value(a),
        Command::Lowerbound(a) => serde_json::to_value(a),
        Command::Autocorr(a) => serde_json::to_value(a),
        Command::Lpdecay(a) => serde_json::to_value(a),
        Command::Martingale(a) => serde_json::to_value(a),
        Command::Erdos(a) => serde_json::to_value(a),
        Command::Obstruct(a) => serde_json::to_value(a),
        Command::Pressure(a) => serde_json::to_value(a),
        Command::Tower(a) => serde_json::to_value(a),
        Command::Oracle(a) => serde_json::to_value(a),
    };
    v.unwrap_or(serde_json::Value::Null)
}

fn parse_args() -> Result<Cli, ExitCode> {
    let mut argv: Vec<String> = std::env::args().collect();
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    let path = config::extract_path(&mut argv).map_err(|e| fail(e.0))?;
    if let Some(path) = path {
        let entries = config::load(path.as_ref()).map_err(|e| fail(e.0))?;
        let Some(pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
            return Err(fail("a subcommand is required with --config".into()));
        };
        let flags = config::to_flags(&Cli::command(), &argv[pos], &entries).map_err(|e| fail(e.0))?;
        argv.splice(pos + 1..pos + 1, flags);
    }
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        ExitCode::from(if e.use_stderr() { 2 } else { 0 })
    })
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let cmd = &cli.command;
    let common = cmd.common().clone();
    let outcome = ldlab_core::parallel::with_workers(common.workers, || commands::run(cmd));
    let outcome = match outcome {
        Ok(o) => o,
        Err(CliError::Param(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let dir = &common.out;
    let written = (|| -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = json!({
            "tool": "ldlab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": cmd.name(),
            "theorem": outcome.theorem,
            "seed": common.seed,
            "params": params(cmd),
        });
        output::write_manifest(&dir.join("manifest.json"), &manifest)?;
        if common.formats.contains(&Format::Csv) {
            output::write_csv(&dir.join("results.csv"), &outcome.records)?;
        }
        if common.formats.contains(&Format::Json) {
            output::write_json(&dir.join("results.json"), &outcome.summary, &outcome.records)?;
        }
        if common.formats.contains(&Format::Svg) {
            if let Some(plot) = &outcome.plot {
                fs::write(dir.join("plot.svg"), plot.render())?;
            }
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: cannot write to '{}': {e}", dir.display());
        return ExitCode::from(1);
    }
    println!("{}", outcome.summary.to_json());
    if let Some((ok, detail)) = &outcome.check {
        if common.check {
            println!("check {}: {detail}", if *ok { "passed" } else { "FAILED" });
            if !ok {
                return ExitCode::from(3);
            }
        }
    }
    ExitCode::SUCCESS
}
