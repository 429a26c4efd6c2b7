fn main() {
    std::process::exit(bergman_lab::commands::run());
}
