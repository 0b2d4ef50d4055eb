fn main() {
    std::process::exit(qbvine_cli::main_with(std::env::args_os()));
}
