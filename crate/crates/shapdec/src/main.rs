fn main() {
    std::process::exit(shapdec::cli::run(std::env::args_os()));
}
