fn main() {
    std::process::exit(autoplex::cli::run(std::env::args_os()));
}
