use clap::Parser;

fn main() {
    let cli = evsup::cli::Cli::parse();
    if let Err(e) = evsup::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
