use std::io::Write;

use clap::Parser;

use numgame::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let out = execute(&cli);
    print!("{}", out.stdout);
    std::io::stdout().flush().ok();
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr);
    }
    std::process::exit(out.code);
}
