fn main() {
    std::process::exit(sdprel::cli::run(std::env::args_os()));
}
