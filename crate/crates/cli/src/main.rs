use clap::Parser;
use qgat_cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QGAT_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(e) = qgat_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
