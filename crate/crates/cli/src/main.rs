fn main() {
    std::process::exit(cmca_cli::main_with(std::env::args_os()));
}
