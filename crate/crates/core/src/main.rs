fn main() {
    std::process::exit(lpshrink::cli::dispatch(std::env::args_os()));
}
