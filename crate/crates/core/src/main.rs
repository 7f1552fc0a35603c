fn main() {
    std::process::exit(pagc::cli::main_with_args(std::env::args_os()));
}
