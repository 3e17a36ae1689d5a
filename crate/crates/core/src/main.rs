fn main() {
    std::process::exit(spatial_gibbs::cli::main_with_args(std::env::args_os()));
}
