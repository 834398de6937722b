use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ice::cli::Cli::parse();
    match ice::cli::run(cli) {
        Ok((out, warn)) => {
            print!("{out}");
            eprint!("{warn}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            // 2: bad input, 3: internal contract failure
            ExitCode::from(if e.is_contract() { 3 } else { 2 })
        }
    }
}
