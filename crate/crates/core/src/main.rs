fn main() {
    std::process::exit(kaehlerlab::cli::main_with_args(std::env::args_os()));
}
