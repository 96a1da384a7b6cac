fn main() {
    std::process::exit(labseg::cli::main_with_args(std::env::args_os()));
}
