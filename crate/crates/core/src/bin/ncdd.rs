fn main() {
    std::process::exit(ncdd::cli::main_with_args(std::env::args_os()));
}
