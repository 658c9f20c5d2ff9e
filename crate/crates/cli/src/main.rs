use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use memcell_cli::{run, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("memcell: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli, args.into_iter().skip(1).collect()) {
        Ok(report) => {
            println!("{}", report.summary);
            println!("manifest: {}", report.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memcell: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
