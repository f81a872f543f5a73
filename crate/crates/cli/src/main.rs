use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use prunechain_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let mut stdout = std::io::stdout().lock();
    let result = prunechain_cli::run(cli, &mut stdout);
    let _ = stdout.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                let body = serde_json::json!({ "error": e.reason, "message": e.message, "exit": e.kind as u8 });
                eprintln!("{body}");
            } else {
                eprintln!("prunechain: {e}");
            }
            e.exit_code()
        }
    }
}
