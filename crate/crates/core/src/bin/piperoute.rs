fn main() {
    std::process::exit(piperoute::cli::run_from(std::env::args_os()));
}
