fn main() {
    std::process::exit(ancilla_phase::cli::run(std::env::args_os()));
}
