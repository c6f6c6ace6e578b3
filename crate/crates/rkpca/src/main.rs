use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = rkpca::cli::Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    ExitCode::from(rkpca::cli::run(cli))
}
