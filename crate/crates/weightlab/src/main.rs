fn main() {
    std::process::exit(weightlab::cli::dispatch(std::env::args_os()));
}
