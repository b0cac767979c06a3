mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest(flags) => commands::cmd_ingest(config, flags),
        Command::Stats(flags) => commands::cmd_stats(config, flags),
        Command::Train(flags) => commands::cmd_train(config, flags),
        Command::Augment(flags) => commands::cmd_augment(config, flags),
        Command::Instructions(flags) => commands::cmd_instructions(config, flags),
        Command::Evaluate(flags) => commands::cmd_evaluate(config, flags),
        Command::Sweep(flags) => commands::cmd_sweep(config, flags),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code_for(&err))
        }
    }
}
