fn main() {
    std::process::exit(lapcert::cli::main_with_args(std::env::args_os()));
}
