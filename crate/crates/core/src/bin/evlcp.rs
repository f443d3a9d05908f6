use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    evlcp::cli::main_from(std::env::args_os())
}
