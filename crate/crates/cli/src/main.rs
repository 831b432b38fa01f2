fn main() {
    std::process::exit(qustat_cli::main_entry(std::env::args_os()));
}
