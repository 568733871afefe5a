mod args;
mod commands;
mod config;
mod format;
mod output;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use commands::{CliError, EXIT_DOMAIN, EXIT_USAGE};

/// Whether subcommand `sub` has a long flag named `flag`.
fn accepts(sub: &str, flag: &str) -> bool {
    Cli::command()
        .find_subcommand(sub)
        .is_some_and(|c| c.get_arguments().any(|a| a.get_long() == Some(flag)))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BRIDGELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BRIDGELAB_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Domain(e.to_string()))
}

fn run() -> i32 {
    let mut argv: Vec<String> = std::env::args().collect();
    let prepared = config::take_config_path(&mut argv).and_then(|path| match path {
        None => Ok(()),
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| format!("cannot read config {p}: {e}"))?;
            config::apply(&mut argv, &text, &accepts)
        }
    });
    if let Err(msg) = prepared {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.code();
    }
    let outcome = match &cli.command {
        Command::Density(a) => commands::density(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sample(a) => commands::sample(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{}", Cli::command().render_usage());
            }
            debug_assert!(e.code() == EXIT_USAGE || e.code() == EXIT_DOMAIN);
            e.code()
        }
    }
}

fn main() {
    std::process::exit(run());
}
