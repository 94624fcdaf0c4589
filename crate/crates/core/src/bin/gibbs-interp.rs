fn main() {
    std::process::exit(gibbs_interp::cli::main(std::env::args_os()));
}
