use clap::Parser;
use qswap::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
