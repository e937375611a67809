fn main() {
    std::process::exit(cooplab::cli::run());
}
