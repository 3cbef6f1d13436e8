use std::io;

use mecanum_energy::cli::run_cli;

fn main() {
    let status = run_cli(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(status.code());
}
