fn main() {
    std::process::exit(qcl::cli::run_cli(std::env::args_os()));
}
