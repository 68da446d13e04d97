use clap::Parser;
use donn::cli::{run, Cli, EXIT_ERROR};

fn main() {
    // clap handles usage errors itself (exit code 2) and --help/--version
    // (exit code 0).
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(EXIT_ERROR);
        }
    }
}
