fn main() {
    std::process::exit(mimo_aging::cli::run(std::env::args_os()));
}
