use std::process::ExitCode;

use clap::Parser;
use hermanlab_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hermanlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
