use clap::Parser;

fn main() {
    let cli = cdedit::cli::Cli::parse();
    match cdedit::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
