fn main() -> std::process::ExitCode {
    detmax::cli::main()
}
