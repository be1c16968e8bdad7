fn main() {
    std::process::exit(fbt::cli::main_with_args(std::env::args_os()));
}
