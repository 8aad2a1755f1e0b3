fn main() -> std::process::ExitCode {
    wasserstress::cli::main()
}
