fn main() {
    std::process::exit(stencilforge::cli::main_with_args(std::env::args_os()));
}
