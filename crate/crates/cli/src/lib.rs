//! Command-line front end: snapshot files, reports and the `fit`,
//! `simulate`, `check` and `bounds` commands.

pub mod args;
pub mod commands;
pub mod format;
pub mod report;

use args::{Cli, Command};

/// Exit status for usage and input errors.
pub const EXIT_USAGE: i32 = 1;

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: thread count must be at least 1");
            return EXIT_USAGE;
        }
        // only fails if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Check(a) => commands::check(a),
        Command::Bounds(a) => commands::bounds(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_USAGE
    })
}
