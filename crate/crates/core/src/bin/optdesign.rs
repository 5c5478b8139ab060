fn main() {
    std::process::exit(optdesign::cli::run(std::env::args_os()));
}
