fn main() {
    std::process::exit(tsmtl_harness::cli::main_with_args(std::env::args_os()));
}
