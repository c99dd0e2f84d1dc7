//! `abplab`: config-driven experiment runner writing versioned CSV reports.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Flags;

#[derive(Parser)]
#[command(
    name = "abplab",
    version,
    about = "Experiments on degenerate Pucci operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run estimate checks on a gallery bundle or a free problem.
    Check(Flags),
    /// Observed orders of the linear solver on a manufactured problem.
    Convergence(Flags),
    /// One row per value of a single swept parameter.
    Sweep(Flags),
    /// Dump concave envelopes and contact masks.
    Envelope(Flags),
    /// Dump solver output.
    Solve(Flags),
}

type Runner = fn(&config::Settings) -> anyhow::Result<commands::Outcome>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags, run): (&str, &Flags, Runner) = match &cli.command {
        Command::Check(f) => ("check", f, commands::check),
        Command::Convergence(f) => ("convergence", f, commands::convergence),
        Command::Sweep(f) => ("sweep", f, commands::sweep),
        Command::Envelope(f) => ("envelope", f, commands::envelope),
        Command::Solve(f) => ("solve", f, commands::solve),
    };
    let result = flags.merged().and_then(|c| {
        if let Some(cmd) = &c.command {
            if cmd != name {
                anyhow::bail!("`command` in the config is `{cmd}` but `{name}` was invoked");
            }
        }
        config::resolve(&c)
    });
    let outcome = result.and_then(|s| run(&s));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                eprintln!("{line}");
            }
            println!("wrote {}", o.csv.display());
            for p in &o.snapshots {
                println!("wrote {}", p.display());
            }
            ExitCode::from(o.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let hypothesis = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<abplab::Error>(),
                    Some(abplab::Error::Hypothesis(_))
                )
            });
            ExitCode::from(if hypothesis { 2 } else { 1 })
        }
    }
}
