fn main() {
    std::process::exit(sarcalab_cli::run(std::env::args_os()));
}
