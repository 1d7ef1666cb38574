fn main() -> std::process::ExitCode { accord_core::cli::main() }
