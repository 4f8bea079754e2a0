use clap::Parser;
use mapga_cli::commands::{run, Cli};
use mapga_cli::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprint!("{}", e.render());
            eprintln!("{}", err.machine_line(None));
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("{}", e.machine_line(cli.config_path()));
        std::process::exit(e.exit_code());
    }
}
