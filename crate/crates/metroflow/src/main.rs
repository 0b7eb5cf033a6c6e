fn main() {
    std::process::exit(metroflow::cli::run());
}
