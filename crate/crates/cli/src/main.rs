fn main() {
    std::process::exit(ontolab_cli::main_with_args(std::env::args_os()));
}
