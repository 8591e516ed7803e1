fn main() {
    std::process::exit(pcc_cli::run(std::env::args_os()));
}
