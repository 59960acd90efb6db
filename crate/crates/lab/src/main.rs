use std::process::ExitCode;

fn main() -> ExitCode {
    higher_lab::cli::main(std::env::args_os())
}
