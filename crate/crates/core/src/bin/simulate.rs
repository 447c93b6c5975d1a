fn main() {
    std::process::exit(spatial_coding::cli::main_with_args(std::env::args_os()));
}
