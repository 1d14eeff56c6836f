use clap::Parser;

fn main() {
    let cli = mug_cli::Cli::parse();
    std::process::exit(mug_cli::run(cli));
}
