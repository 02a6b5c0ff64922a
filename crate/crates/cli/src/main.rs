use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(klx_cli::main_with(std::env::args_os()))
}
