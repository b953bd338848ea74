use clap::Parser;

fn main() {
    let cli = spinmetro::cli::Cli::parse();
    match spinmetro::cli::run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
