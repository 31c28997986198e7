use std::process::ExitCode;

fn main() -> ExitCode {
    scalebreak::cli::main()
}
