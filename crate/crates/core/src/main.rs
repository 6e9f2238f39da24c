fn main() {
    std::process::exit(stablefield::cli::main());
}
