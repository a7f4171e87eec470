fn main() {
    std::process::exit(concsem::cli::run());
}
