fn main() {
    std::process::exit(cssm::cli::run(std::env::args_os()));
}
