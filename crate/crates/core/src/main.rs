fn main() {
    // Failures are reported as structured JSON by `cli::run`.
    std::panic::set_hook(Box::new(|_| {}));
    std::process::exit(okid_era::cli::run(std::env::args_os()));
}
