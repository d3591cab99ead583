fn main() {
    std::process::exit(msiq::cli::run(std::env::args_os()));
}
