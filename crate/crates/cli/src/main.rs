use clap::Parser;

fn main() {
    std::process::exit(chern_cli::run(chern_cli::Cli::parse()));
}
