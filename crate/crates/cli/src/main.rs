use clap::Parser;

fn main() {
    let cli = eprsim_cli::Cli::parse();
    std::process::exit(eprsim_cli::run(cli));
}
