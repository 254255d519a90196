fn main() {
    std::process::exit(iterfit::cli::run(std::env::args_os()));
}
