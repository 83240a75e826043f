fn main() {
    std::process::exit(mixnet::cli::main());
}
