fn main() {
    std::process::exit(gradbound::cli::main_with(std::env::args_os()));
}
