use clap::Parser;

fn main() {
    let cli = geocoh::cli::Cli::parse();
    let mut out = std::io::stdout().lock();
    let code = geocoh::cli::run(&cli, &mut out);
    std::process::exit(code);
}
