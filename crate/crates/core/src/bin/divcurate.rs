fn main() {
    std::process::exit(divcurate::cli::main_exit());
}
