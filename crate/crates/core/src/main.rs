fn main() {
    std::process::exit(meal_core::cli::parse_and_dispatch(std::env::args_os()));
}
