fn main() {
    std::process::exit(kam_dea::cli::main_with_args(std::env::args_os()));
}
