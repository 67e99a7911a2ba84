fn main() {
    std::process::exit(randla_cli::dispatch(std::env::args_os()));
}
