fn main() {
    std::process::exit(clutterlab_cli::run());
}
