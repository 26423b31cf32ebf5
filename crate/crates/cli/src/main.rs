use clap::Parser;

fn main() {
    let cli = polylab_cli::Cli::parse();
    match polylab_cli::run(&cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
