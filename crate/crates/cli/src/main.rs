mod cli;
mod commands;
mod failure;
mod io;

use clap::Parser;

use crate::cli::{Cli, Command};

fn main() {
    let cli = Cli::parse();

    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IQA_FORGE_LOG", "error"))
        .init();
    if let Some(jobs) = cli.jobs {
        // Ignore the error: the pool can only be configured once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let result = match cli.command {
        Command::Fixture(args) => commands::fixture::run(args),
        Command::Distort(args) => commands::distort::run(args),
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Split(args) => commands::split::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Report(args) => commands::report::run(args),
    };

    match result {
        Ok(summary) => println!("{summary}"),
        Err(failure) => {
            eprintln!("error: {failure}");
            std::process::exit(failure.exit_code());
        }
    }
}
