use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACAS_LOG", "warn")).init();
    let cli = acas_cli::Cli::parse();
    if let Err(err) = acas_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
