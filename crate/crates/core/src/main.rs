fn main() {
    std::process::exit(lattice_nls::cli::run());
}
