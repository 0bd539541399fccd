//! `splatcut` command line and HTTP server.

pub mod args;
pub mod commands;
pub mod server;

use thiserror::Error;

pub use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or inconsistent inputs.
    #[error(transparent)]
    Input(splatcut::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(splatcut::Error::InvalidInput(msg.into()))
    }
}

impl From<splatcut::Error> for CliError {
    fn from(e: splatcut::Error) -> Self {
        match e {
            splatcut::Error::Stream(_) | splatcut::Error::TooLarge(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other),
        }
    }
}

/// Runs one command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Segment(a) => commands::segment(&a, out),
        Command::Render(a) => commands::render(&a, out),
        Command::Eval(a) => commands::eval(&a, out),
        Command::Bench(a) => commands::bench(&a, out),
        Command::Serve(a) => server::serve(&a),
    }
}
