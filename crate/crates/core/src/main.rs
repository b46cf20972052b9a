fn main() {
    std::process::exit(matnorm::cli::run(std::env::args_os()));
}
