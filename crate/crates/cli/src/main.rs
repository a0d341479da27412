fn main() {
    std::process::exit(argwin_cli::run(std::env::args_os()));
}
