fn main() -> std::process::ExitCode {
    bnn_mcmc_cli::main()
}
