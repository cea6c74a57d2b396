fn main() {
    std::process::exit(nhlab::cli::run(std::env::args_os()));
}
