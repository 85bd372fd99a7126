fn main() {
    std::process::exit(quasiwork::cli::run());
}
