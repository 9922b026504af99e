fn main() -> std::process::ExitCode {
    floquet_kdvbf::cli::main()
}
