fn main() {
    std::process::exit(multlab::cli::main_entry());
}
