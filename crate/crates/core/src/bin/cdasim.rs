fn main() {
    std::process::exit(cdasim::cli::main_with(std::env::args_os()));
}
