fn main() {
    std::process::exit(crbforge_cli::run(std::env::args_os()));
}
