fn main() {
    std::process::exit(stepwise_cli::run_command(std::env::args_os()));
}
