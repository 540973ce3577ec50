fn main() {
    std::process::exit(hoeg::cli::main_with(std::env::args_os()));
}
