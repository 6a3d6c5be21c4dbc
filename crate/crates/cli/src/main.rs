fn main() {
    std::process::exit(prtail_cli::commands::main_with(std::env::args_os()));
}
