use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fairdiv_cli::run(std::env::args()) as u8)
}
