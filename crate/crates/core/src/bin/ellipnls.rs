fn main() {
    std::process::exit(ellipnls_core::cli::main());
}
