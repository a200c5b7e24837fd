mod args;
mod commands;
mod input;
mod report;
mod svg;

use clap::Parser;

use args::{Cli, Command};
use report::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Embed(a) => commands::embed(a),
        Command::Gram(a) => commands::gram(a),
        Command::Geometry(a) => commands::geometry(a),
        Command::Engineer(a) => commands::engineer(a),
        Command::Learn(a) => commands::learn(a),
        Command::Screen(a) => commands::screen_cmd(a),
        Command::DlogDemo(a) => commands::dlog_demo(a),
        Command::AppendixGDemo(a) => commands::appendix_g_demo(a),
    }
}

fn threads(cli: &Cli) -> usize {
    match &cli.command {
        Command::Embed(a) => a.common.threads,
        Command::Gram(a) => a.common.threads,
        Command::Geometry(a) => a.common.threads,
        Command::Engineer(a) => a.common.threads,
        Command::Learn(a) => a.common.threads,
        Command::Screen(a) => a.common.threads,
        Command::DlogDemo(a) => a.common.threads,
        Command::AppendixGDemo(a) => a.common.threads,
    }
}

fn main() {
    let cli = Cli::parse();
    let n = threads(&cli);
    if n > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(e) = run(cli) {
        eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).expect("error serializes"));
        std::process::exit(e.exit_code());
    }
}
