fn main() {
    std::process::exit(bess_cli::run_args(std::env::args_os()));
}
