use clap::Parser;

fn main() {
    let cli = maxp_cli::Cli::parse();
    match maxp_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
