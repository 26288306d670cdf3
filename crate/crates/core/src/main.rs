fn main() {
    std::process::exit(magnon_sta::cli::main_with(std::env::args_os()));
}
