fn main() {
    std::process::exit(cosserat_af::cli::run(std::env::args_os()));
}
