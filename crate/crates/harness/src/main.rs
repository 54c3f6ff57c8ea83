fn main() {
    std::process::exit(dpope::cli::main_with_args(std::env::args_os()));
}
