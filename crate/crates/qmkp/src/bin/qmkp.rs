use std::process::ExitCode;

fn main() -> ExitCode {
    qmkp::cli::main()
}
