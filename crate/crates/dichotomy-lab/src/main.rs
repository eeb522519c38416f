fn main() {
    std::process::exit(dichotomy_lab::cli::run());
}
