fn main() {
    std::process::exit(kickci_cli::run());
}
