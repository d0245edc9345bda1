fn main() {
    std::process::exit(panolight::cli::run(std::env::args_os()));
}
