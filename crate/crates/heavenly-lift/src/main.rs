fn main() {
    std::process::exit(heavenly_lift::cli::run(std::env::args_os()));
}
