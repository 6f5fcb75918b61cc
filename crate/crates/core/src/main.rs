use std::process::ExitCode;

fn main() -> ExitCode {
    qf_core::cli::main_entry()
}
