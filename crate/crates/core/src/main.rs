fn main() {
    std::process::exit(conemetric::cli::run(std::env::args_os()));
}
