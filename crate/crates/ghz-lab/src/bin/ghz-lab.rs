fn main() {
    std::process::exit(ghz_lab::cli::run(std::env::args_os()));
}
