fn main() {
    std::process::exit(mrfdens::run(std::env::args_os()));
}
