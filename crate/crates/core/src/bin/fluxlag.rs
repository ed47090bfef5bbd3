fn main() {
    std::process::exit(fluxlag::cli::main_with_args(std::env::args_os()));
}
