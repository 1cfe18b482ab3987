fn main() {
    std::process::exit(gyrospray::cli::run(std::env::args_os()));
}
