use clap::Parser;

fn main() {
    let cli = spectral_lab::cli::Cli::parse();
    std::process::exit(spectral_lab::cli::run(cli));
}
