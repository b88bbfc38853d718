fn main() {
    std::process::exit(markov_product::cli::main_with_args(std::env::args_os()));
}
