fn main() {
    std::process::exit(ekbf_core::harness::run_cli(std::env::args_os()));
}
