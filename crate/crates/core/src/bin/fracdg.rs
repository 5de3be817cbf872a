use std::process::ExitCode;

fn main() -> ExitCode {
    fracdg::cli::main_with_args(std::env::args_os())
}
