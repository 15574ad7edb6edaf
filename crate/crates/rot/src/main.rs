use clap::Parser;

fn main() {
    env_logger::init();
    let cli = rot::cli::Cli::parse();
    if let Err(e) = cli.execute() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
