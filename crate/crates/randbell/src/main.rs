fn main() {
    std::process::exit(randbell::cli::main_with_args(std::env::args_os()));
}
