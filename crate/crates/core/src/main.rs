fn main() {
    std::process::exit(frechet_subspace::harness::cli::run(std::env::args_os()));
}
