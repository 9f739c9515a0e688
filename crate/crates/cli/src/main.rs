use clap::Parser;
use loopmetric_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are configuration errors; help and version succeed.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = std::panic::catch_unwind(|| run(&cli)).unwrap_or(3);
    std::process::exit(code);
}
