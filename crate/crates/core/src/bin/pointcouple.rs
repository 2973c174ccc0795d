fn main() {
    std::process::exit(pointcouple::cli::dispatch(std::env::args_os()));
}
