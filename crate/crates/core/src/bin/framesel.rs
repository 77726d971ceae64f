fn main() {
    std::process::exit(framesel::cli::run_cli(std::env::args_os()));
}
