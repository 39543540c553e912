fn main() {
    std::process::exit(segsim_cli::run(std::env::args_os()));
}
