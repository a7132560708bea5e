use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csa::experiments::runner::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "csa", version, about = "Christoffel sparse approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples for a strategy and basis.
    Sample(Common),
    /// Solve one basis pursuit (denoising) problem from a JSON system.
    Recover(Common),
    /// Recovery-probability maps over (M/N, s/M).
    Transition(Common),
    /// Christoffel-weighted Gramians and their inverse square roots.
    Gramian(Common),
    /// Coherence scans and sample-count bounds.
    Bounds(Common),
    /// Convergence study on the stochastic diffusion benchmark.
    Pde(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Full-scale trial counts.
    #[arg(long)]
    full: bool,
    /// Print the plan without running.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = serde_json::json!({
                "error": { "kind": "usage", "message": e.to_string().trim_end(), "command": null }
            });
            eprintln!("{report}");
            return ExitCode::from(2);
        }
    };
    let (command, c) = match cli.command {
        Cmd::Sample(c) => (Command::Sample, c),
        Cmd::Recover(c) => (Command::Recover, c),
        Cmd::Transition(c) => (Command::Transition, c),
        Cmd::Gramian(c) => (Command::Gramian, c),
        Cmd::Bounds(c) => (Command::Bounds, c),
        Cmd::Pde(c) => (Command::Pde, c),
    };
    let opts = RunOptions {
        config: c.config,
        out: c.out,
        seed: c.seed,
        threads: c.threads,
        full: c.full,
        dry_run: c.dry_run,
    };
    let mut stdout = std::io::stdout();
    match run(command, &opts, &mut stdout) {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(stdout, "{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string(), "command": command.name() }
            });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
