fn main() {
    std::process::exit(voxtrav_cli::run(std::env::args_os()));
}
