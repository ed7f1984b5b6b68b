fn main() {
    std::process::exit(actguard::cli::main_entry());
}
