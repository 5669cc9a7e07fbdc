fn main() {
    std::process::exit(stfields::cli::main());
}
