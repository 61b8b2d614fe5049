fn main() {
    std::process::exit(tailsampler::cli::run(std::env::args_os()));
}
