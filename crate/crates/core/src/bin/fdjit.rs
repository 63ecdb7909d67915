fn main() -> std::process::ExitCode {
    fdjit::cli::main()
}
