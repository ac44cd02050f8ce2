fn main() {
    std::process::exit(spinring::cli::run(std::env::args_os()));
}
