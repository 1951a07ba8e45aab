//! `tunechain`: drive the simulated music-sharing network over a datadir.

mod command;
mod exec;
mod replay;
mod report;
mod store;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use command::Command;
use exec::{code, store_error, Outcome, Session};
use store::{ConfigFlags, Datadir};

#[derive(Parser, Debug)]
#[command(name = "tunechain", version, about = "Simulated blockchain music-sharing network")]
struct Cli {
    /// State directory; created on first use
    #[arg(long, global = true, default_value = "./tunedata")]
    datadir: PathBuf,
    /// Network seed [default: 42]; fixed once the datadir exists
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Price per download in cents [default: 137]
    #[arg(long, global = true)]
    price_cents: Option<u64>,
    /// Number of simulated nodes [default: 4]
    #[arg(long, global = true)]
    nodes: Option<u64>,
    /// Append the command to this scenario file
    #[arg(long, global = true, value_name = "SCENARIO")]
    record: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Register an account and print its address
    Register { email: String, password: String },
    /// Check credentials and print the account address
    Login { email: String, password: String },
    /// Upload a WAV file
    Upload {
        #[arg(long = "as", value_name = "ADDRESS")]
        caller: String,
        #[arg(long)]
        author: String,
        #[arg(long)]
        title: String,
        /// Upload date, "26-Feb-2020 06:03:12am" or UTC seconds [default: now]
        #[arg(long)]
        date: Option<String>,
        file: PathBuf,
    },
    /// Pay for and download a file
    Download {
        #[arg(long = "as", value_name = "ADDRESS")]
        caller: String,
        root: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Let ADDR download ROOT without paying
    Grant {
        #[arg(long = "as", value_name = "OWNER")]
        caller: String,
        addr: String,
        root: String,
    },
    /// Withdraw a grant
    Revoke {
        #[arg(long = "as", value_name = "OWNER")]
        caller: String,
        addr: String,
        root: String,
    },
    /// Print downloads and revenue per file, newest first
    Revenue,
    /// Print a parent block or the recorded violations
    Explore {
        #[arg(long, required_unless_present = "violations", conflicts_with = "violations")]
        height: Option<u64>,
        #[arg(long)]
        violations: bool,
    },
    /// Print a WAV file's fingerprint
    Fingerprint { file: PathBuf },
    /// Run a scenario file, resuming where a previous run stopped
    Replay {
        scenario: PathBuf,
        /// Run at most this many steps
        #[arg(long)]
        limit: Option<usize>,
    },
}

fn to_command(sub: Sub) -> Command {
    match sub {
        Sub::Register { email, password } => Command::Register { email, password },
        Sub::Login { email, password } => Command::Login { email, password },
        Sub::Upload { caller, author, title, date, file } => Command::Upload { caller, file, author, title, date },
        Sub::Download { caller, root, out } => Command::Download { caller, root, out },
        Sub::Grant { caller, addr, root } => Command::Grant { caller, addr, root },
        Sub::Revoke { caller, addr, root } => Command::Revoke { caller, addr, root },
        Sub::Revenue => Command::Revenue,
        Sub::Explore { height: Some(h), .. } => Command::ExploreHeight(h),
        Sub::Explore { .. } => Command::ExploreViolations,
        Sub::Fingerprint { file } => Command::Fingerprint { file },
        Sub::Replay { .. } => unreachable!("replay is handled separately"),
    }
}

/// Paths in recorded steps are made absolute so the scenario replays from
/// anywhere.
fn absolute(cmd: Command) -> Command {
    let abs = |p: PathBuf| std::path::absolute(&p).unwrap_or(p);
    match cmd {
        Command::Upload { caller, file, author, title, date } => {
            Command::Upload { caller, file: abs(file), author, title, date }
        }
        Command::Download { caller, root, out } => Command::Download { caller, root, out: abs(out) },
        Command::Fingerprint { file } => Command::Fingerprint { file: abs(file) },
        other => other,
    }
}

fn open_session(cli: &Cli) -> Result<Session, Outcome> {
    let flags = ConfigFlags { seed: cli.seed, price_cents: cli.price_cents, nodes: cli.nodes };
    let dir = Datadir::open(&cli.datadir, flags).map_err(|e| store_error(&e))?;
    Session::open(dir).map_err(|e| store_error(&e))
}

fn run(cli: Cli) -> Outcome {
    if let Sub::Replay { scenario, limit } = &cli.cmd {
        if cli.record.is_some() {
            return Outcome::fail(code::USAGE, "--record cannot be combined with replay");
        }
        return match open_session(&cli) {
            Ok(mut s) => replay::replay(&mut s, scenario, *limit),
            Err(o) => o,
        };
    }
    let record = cli.record.clone();
    let out = match cli.cmd {
        Sub::Fingerprint { ref file } => exec::fingerprint_file(file),
        _ => match open_session(&cli) {
            Ok(mut s) => {
                let cmd = to_command(cli.cmd);
                let out = s.execute(&cmd);
                if let Some(path) = record {
                    let mut step = absolute(cmd).to_step();
                    step.expect = (out.code != code::OK).then_some(out.code);
                    if let Err(e) = replay::record(&path, step) {
                        let mut o = Outcome::fail(code::IO, e);
                        o.stdout = out.stdout;
                        return o;
                    }
                }
                return out;
            }
            Err(o) => o,
        },
    };
    if let (Some(path), Sub::Fingerprint { file }) = (record, &cli.cmd) {
        let mut step = absolute(Command::Fingerprint { file: file.clone() }).to_step();
        step.expect = (out.code != code::OK).then_some(out.code);
        if let Err(e) = replay::record(&path, step) {
            return Outcome::fail(code::IO, e);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { code::OK });
        }
    };
    let out = run(cli);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(out.code)
}
