use clap::Parser;

fn main() {
    let cli = sobol_cli::Cli::parse();
    if let Err(e) = sobol_cli::run(cli) {
        eprintln!("sobol-stream: {e}");
        std::process::exit(e.exit_code());
    }
}
