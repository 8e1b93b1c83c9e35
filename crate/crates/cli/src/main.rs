fn main() {
    std::process::exit(cogradio_cli::main_with_args(std::env::args_os()));
}
