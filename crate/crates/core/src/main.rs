fn main() {
    std::process::exit(sumeval::cli::main_with_args(std::env::args_os()));
}
