fn main() {
    std::process::exit(lqshrink_cli::run(std::env::args_os()));
}
