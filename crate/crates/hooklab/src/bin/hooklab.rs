fn main() {
    std::process::exit(hooklab::cli::main_entry());
}
