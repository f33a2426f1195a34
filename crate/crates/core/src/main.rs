fn main() {
    std::process::exit(bathlab::cli::main_with_args(std::env::args_os()));
}
