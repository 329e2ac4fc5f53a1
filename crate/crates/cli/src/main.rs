use std::io;
use std::process::ExitCode;

use bidgame_cli::commands::{run, Cli, Command, EXIT_INPUT};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { port, store } = &cli.command {
        let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
        return match rt.block_on(bidgame_cli::service::serve(*port, store.clone())) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_INPUT as u8)
            }
        };
    }
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = io::stdout();
    match run(cli, &mut input, &mut out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
