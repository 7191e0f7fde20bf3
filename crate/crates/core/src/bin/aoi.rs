fn main() {
    std::process::exit(aoi_core::cli::main_with(std::env::args_os()));
}
