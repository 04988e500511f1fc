fn main() {
    std::process::exit(floodgauge::cli::run(std::env::args_os()));
}
