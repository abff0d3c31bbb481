use clap::Parser;
use gathering_cli::app::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(dispatch(&cli));
}
