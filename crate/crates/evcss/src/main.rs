fn main() {
    std::process::exit(evcss::harness::cli_main(std::env::args_os()));
}
