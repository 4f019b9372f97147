use clap::Parser;

fn main() {
    let cli = phlab::cli::Cli::parse();
    if let Err(error) = phlab::cli::run(cli) {
        eprintln!("{}", error.to_json());
        std::process::exit(1);
    }
}
