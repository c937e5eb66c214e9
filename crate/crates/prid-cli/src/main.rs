use clap::Parser;

fn main() {
    let cli = prid_cli::Cli::parse();
    std::process::exit(prid_cli::run(cli));
}
