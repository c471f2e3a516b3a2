fn main() {
    std::process::exit(multipole_core::cli::run(std::env::args_os()));
}
