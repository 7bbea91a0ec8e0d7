fn main() {
    std::process::exit(howsumm::cli::run(std::env::args_os()));
}
