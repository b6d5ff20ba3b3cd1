//! File formats, reports and the `gkdr` command line on top of the `gkdr`
//! core crate.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use crate::args::{Cli, Command};
pub use crate::commands::run_benchmark;
pub use crate::error::{CliError, CliResult, ExitCode};
pub use crate::report::RunReport;

/// Runs one parsed command. `argv` is echoed into the report.
pub fn run(cli: &Cli, argv: Vec<String>) -> CliResult<RunReport> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a, argv),
        Command::Cv(a) => commands::cmd_cv(a, argv),
        Command::Bench(a) => commands::cmd_bench(a, argv),
        Command::Eval(a) => commands::cmd_eval(a, argv),
    }
}
