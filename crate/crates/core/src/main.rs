fn main() {
    std::process::exit(autobid::cli::run(std::env::args_os()));
}
