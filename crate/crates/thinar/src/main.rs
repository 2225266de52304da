fn main() {
    env_logger::init();
    std::process::exit(thinar::cli::run_subcommand(std::env::args()));
}
