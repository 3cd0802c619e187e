use clap::error::ErrorKind;
use clap::Parser;
use tailenv::cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        // bad flags are input errors like any other
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("tailenv: {e:#}");
            std::process::exit(1);
        }
    }
}
