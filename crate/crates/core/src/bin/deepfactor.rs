fn main() {
    std::process::exit(deepfactor::cli::run(std::env::args_os()));
}
