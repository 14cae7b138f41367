fn main() {
    std::process::exit(auscult_cli::run(std::env::args_os()));
}
