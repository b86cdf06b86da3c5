use clap::Parser;
use marcus_core::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
