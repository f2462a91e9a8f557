fn main() {
    std::process::exit(vacuum_berry::cli::run_from_env());
}
