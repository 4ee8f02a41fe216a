fn main() {
    std::process::exit(locp::cli::main());
}
