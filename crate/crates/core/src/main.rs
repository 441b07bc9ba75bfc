fn main() {
    std::process::exit(vacua::cli::run_command(std::env::args_os()));
}
