fn main() {
    std::process::exit(finite_locc::cli::run(std::env::args_os()));
}
