fn main() {
    std::process::exit(henon::cli::run());
}
