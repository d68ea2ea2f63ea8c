mod config;
mod presets;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::Cli;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for name in presets::NAMES {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run::run(&cfg) {
        Ok(summary) => {
            for p in &summary.outputs {
                println!("{}", p.display());
            }
            println!("{}", summary.manifest.display());
            for r in summary.reports.iter().filter(|r| r.failed) {
                eprintln!("failed: {} ({})", r.label, r.flags.join("; "));
            }
            if summary.failed() {
                ExitCode::from(EXIT_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
