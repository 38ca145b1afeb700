use std::process::ExitCode;

fn main() -> ExitCode {
    uavdc::cli::run(std::env::args_os())
}
