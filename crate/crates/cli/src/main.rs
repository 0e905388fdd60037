fn main() {
    std::process::exit(stemcast::run(std::env::args_os()));
}
