fn main() {
    std::process::exit(mtsieve::cli::main_with_args(std::env::args_os()));
}
