fn main() {
    if let Err(e) = tbp_cli::run(std::env::args_os()) {
        eprintln!("tbp: {e}");
        std::process::exit(e.exit_code());
    }
}
