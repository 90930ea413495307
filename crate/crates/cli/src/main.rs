fn main() {
    std::process::exit(pando_cli::run_command(std::env::args_os()));
}
