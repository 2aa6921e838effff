fn main() -> std::process::ExitCode {
    prmkit::cli::main()
}
