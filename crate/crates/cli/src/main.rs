// SPDX-License-Identifier: Apache-2.0

use clap::Parser;
use gparity_cli::{execute, Cli};

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
