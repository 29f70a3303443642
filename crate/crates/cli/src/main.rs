fn main() {
    std::process::exit(parley_cli::run_cli(std::env::args_os()));
}
