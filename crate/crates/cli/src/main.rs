mod args;
mod attack;
mod bench;
mod keys;
mod net;
mod params;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{AttackCommand, Cli, Command, ParamsCommand};

/// sysexits EX_USAGE
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input files.
    Usage(String),
    /// Anything else, with the exit code to report.
    Exit(u8, String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn runtime(msg: impl ToString) -> Self {
        Failure::Exit(1, msg.to_string())
    }
}

pub type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Keygen(a) => keys::keygen(&a),
        Command::Prove(a) => net::prove(&a),
        Command::Verify(a) => net::verify(&a),
        Command::Session(a) => net::session(&a),
        Command::Params(ParamsCommand::Check(a)) => params::check(&a),
        Command::Attack(AttackCommand::Linear(a)) => attack::linear(&a),
        Command::Attack(AttackCommand::Forge(a)) => attack::forge(&a),
        Command::Attack(AttackCommand::Det(a)) => attack::det(&a),
        Command::Attack(AttackCommand::Keysize(a)) => attack::keysize(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Exit(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
