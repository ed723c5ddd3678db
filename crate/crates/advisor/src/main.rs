use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = ffcombat_advisor::cli::Cli::parse();
    match ffcombat_advisor::cli::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
