fn main() -> std::process::ExitCode {
    nullplane::cli::main()
}
