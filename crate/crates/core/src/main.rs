fn main() {
    std::process::exit(lindred::cli::run(std::env::args_os()));
}
