fn main() {
    std::process::exit(membrane::cli::run_command(std::env::args_os()));
}
