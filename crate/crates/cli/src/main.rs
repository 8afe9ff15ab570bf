use clap::Parser;

fn main() {
    let cli = maxid_cli::Cli::parse();
    if let Err(e) = maxid_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
