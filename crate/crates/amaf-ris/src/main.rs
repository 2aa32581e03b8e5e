use clap::Parser;

fn main() {
    let cli = amaf_ris::cli::Cli::parse();
    if let Err(e) = amaf_ris::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
