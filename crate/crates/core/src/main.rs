fn main() {
    std::process::exit(irsplan::cli::main_with_args(std::env::args_os()));
}
