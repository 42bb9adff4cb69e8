use clap::Parser;

use dgsep::cli::{self, Cli};
use dgsep::Error;

fn main() {
    let cli = Cli::parse();
    match cli::run(cli) {
        Ok(()) => {}
        Err(Error::Usage(message)) => {
            eprintln!("usage error: {message}");
            std::process::exit(2);
        }
        Err(error) => {
            eprintln!("error: {error}");
            std::process::exit(1);
        }
    }
}
