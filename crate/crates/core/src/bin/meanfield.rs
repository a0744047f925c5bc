use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(meanfield::cli::main_with(std::env::args_os()))
}
