fn main() {
    std::process::exit(pvtree::cli::run(std::env::args_os()));
}
