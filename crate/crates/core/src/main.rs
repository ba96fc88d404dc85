use std::process::ExitCode;

fn main() -> ExitCode {
    match astopo::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("astopo: {e:#}");
            ExitCode::FAILURE
        }
    }
}
