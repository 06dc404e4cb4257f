fn main() -> std::process::ExitCode {
    preme_server::cli::main()
}
