fn main() {
    std::process::exit(eulerfan::cli::main_with_args(std::env::args_os()));
}
