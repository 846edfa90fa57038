//! Batch front end for the `skewwalk` engines.
//!
//! Every run writes its data files plus a `manifest.json` into the output
//! directory. Data files carry no timestamps, so a repeated run with the same
//! arguments reproduces them byte for byte.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod table;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
pub use manifest::{run, RunManifest};

/// Parses, runs and reports; returns the process exit status.
pub fn main_with<S: AsRef<str>>(argv: &[S]) -> i32 {
    let cfg = match parse_config(argv) {
        Ok(cfg) => cfg,
        Err(CliError::Empty) => {
            eprint!("{}", config::usage());
            return CliError::Empty.exit_code();
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("skewlab: {e}");
            return e.exit_code();
        }
    };
    let outcome = std::panic::catch_unwind(|| run(&cfg));
    match outcome {
        Ok(Ok(manifest)) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, cfg.output.join(&f.name).display());
            }
            0
        }
        Ok(Err(e)) => {
            eprintln!("skewlab: {e}");
            e.exit_code()
        }
        Err(_) => CliError::Assertion("engine panicked".into()).exit_code(),
    }
}
