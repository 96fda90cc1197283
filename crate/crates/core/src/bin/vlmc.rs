fn main() {
    std::process::exit(vlmc_oracle::cli::run(std::env::args_os()));
}
