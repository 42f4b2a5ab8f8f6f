fn main() -> std::process::ExitCode {
    tensor_dmd::cli::main_entry()
}
