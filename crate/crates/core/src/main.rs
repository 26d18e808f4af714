fn main() {
    std::process::exit(predopt::cli::run(std::env::args_os()));
}
