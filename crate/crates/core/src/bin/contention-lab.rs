fn main() {
    std::process::exit(contention_lab::cli::main_with_args(std::env::args_os()));
}
