fn main() {
    std::process::exit(heatctl::cli::run());
}
