fn main() {
    std::process::exit(uvrg::cli::run(std::env::args_os()));
}
