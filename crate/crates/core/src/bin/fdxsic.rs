fn main() {
    std::process::exit(fdxsic::cli::parse_and_dispatch(std::env::args_os()));
}
