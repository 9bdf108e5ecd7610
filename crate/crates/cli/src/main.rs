fn main() {
    std::process::exit(approach_cli::main_with_args(std::env::args_os()));
}
