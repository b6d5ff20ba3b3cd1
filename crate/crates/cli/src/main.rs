use clap::error::ErrorKind;
use clap::Parser;
use gkdr_cli::{run, Cli, ExitCode};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::Success,
                _ => ExitCode::InvalidConfig,
            };
            let _ = e.print();
            std::process::exit(code as i32);
        }
    };
    match run(&cli, argv) {
        Ok(report) => {
            if report.command != "bench" {
                println!("{}", summary(&report));
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code() as i32);
        }
    }
}

fn summary(report: &gkdr_cli::RunReport) -> String {
    report
        .metrics
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
