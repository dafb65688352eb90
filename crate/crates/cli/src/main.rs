fn main() {
    std::process::exit(loupe_cli::run_cli(std::env::args_os()));
}
