fn main() {
    std::process::exit(papageno::cli::main_with(std::env::args_os()));
}
