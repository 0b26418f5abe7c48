fn main() {
    std::process::exit(cpwl_core::cli::run_from(std::env::args_os()));
}
