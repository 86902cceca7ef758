fn main() {
    if let Err(e) = beliefworld::harness::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
