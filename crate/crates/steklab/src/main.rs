fn main() {
    std::process::exit(steklab::cli::run());
}
