//! Batch front end for the `ontolab` library: config parsing, experiment
//! dispatch and CSV/JSON report emission.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use run::{run, RunOutput};

use std::io::Write;

/// Parse, run and write the report; returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match try_main(argv) {
        Ok(()) => error::exit::OK,
        Err(e @ CliError::Clap(_)) => {
            let code = e.exit_code();
            if let CliError::Clap(inner) = e {
                let _ = inner.print();
            }
            code
        }
        Err(e) => {
            eprintln!("ontolab: {e}");
            e.exit_code()
        }
    }
}

fn try_main<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = parse_config(argv)?;
    let out = run(&cfg)?;
    match &cfg.output_path {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::Io {
            context: format!("writing {}", path.display()),
            source: e,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    context: "writing to stdout".into(),
                    source: e,
                })?;
        }
    }
    match out.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
