fn main() {
    std::process::exit(ris_core::cli::run(std::env::args_os()));
}
