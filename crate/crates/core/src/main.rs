fn main() {
    std::process::exit(relaysim::cli::run(std::env::args_os()));
}
