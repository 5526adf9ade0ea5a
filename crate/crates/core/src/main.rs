fn main() {
    std::process::exit(clusterkit::cli::main_with_args(std::env::args_os()));
}
