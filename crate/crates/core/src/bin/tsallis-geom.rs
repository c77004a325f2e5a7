fn main() {
    std::process::exit(tsallis_geometry::cli::main_with_args(std::env::args_os()));
}
