fn main() {
    std::process::exit(fanet::cli::run(std::env::args_os()));
}
