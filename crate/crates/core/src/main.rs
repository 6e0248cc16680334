use clap::Parser;
use snake_walk::cli::{self, Cli};

fn main() {
    let parsed = Cli::parse();
    match cli::run(parsed) {
        Ok(artifacts) => {
            for file in artifacts.files {
                println!("{}", file.display());
            }
        }
        Err(err) => {
            let record = serde_json::json!({ "error": err.to_string() });
            eprintln!("{record}");
            std::process::exit(1);
        }
    }
}
