fn main() {
    std::process::exit(hpca_cli::run(std::env::args_os()));
}
