use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match dsas_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { dsas_cli::EXIT_ERROR as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = dsas_cli::run(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
