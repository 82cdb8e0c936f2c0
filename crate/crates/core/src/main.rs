fn main() -> std::process::ExitCode {
    ctxcost::cli::main()
}
