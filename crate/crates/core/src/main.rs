fn main() {
    std::process::exit(otcap::cli::run(std::env::args_os()));
}
