fn main() {
    std::process::exit(darksim::cli::run(std::env::args_os()));
}
