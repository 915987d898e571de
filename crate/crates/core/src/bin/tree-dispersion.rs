fn main() {
    std::process::exit(tree_dispersion::cli::main_with_args(std::env::args_os()));
}
