use clap::Parser;

fn main() {
    let cli = splatcut_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = splatcut_cli::run(cli, &mut stdout) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
