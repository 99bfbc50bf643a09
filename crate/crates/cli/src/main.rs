use std::process::ExitCode;

use clap::Parser;
use wulff_hardy_cli::config::exit_code;
use wulff_hardy_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("WULFF_HARDY_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(done) => {
            if cli.common.json {
                match serde_json::to_string_pretty(&done.summary) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                print!("{}", done.summary.table());
                if let Some(path) = &done.summary_path {
                    println!("summary written to {}", path.display());
                }
            }
            if done.summary.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
