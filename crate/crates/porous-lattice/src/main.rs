use clap::Parser;

use porous_lattice::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
