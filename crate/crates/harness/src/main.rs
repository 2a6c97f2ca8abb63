fn main() {
    std::process::exit(ccl_harness::cli::run(std::env::args_os()));
}
