//! Command-line entry points.
//!
//! Each subcommand parses its arguments, calls one library function and
//! formats the result. Result documents are JSON on stdout; progress and
//! errors go to stderr. Exit codes: 0 success, 1 domain error (the line on
//! stderr starts with the error name), 2 usage error.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::command::{load_vocabulary, match_utterance, Utterance, Vocabulary};
use crate::detection::summarize_dir;
use crate::geometry::WorldPoint;
use crate::kinematics::{
    forward_kinematics, ik_all_solutions, inverse_kinematics, ArmGeometry, ElbowBranch, JointAngles,
};
use crate::service::{Service, ServiceConfig};
use crate::simulator::parse_scenario;

#[derive(Debug, Parser)]
#[command(name = "agrobot", version, about = "Deterministic agricultural pick-and-place simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Batch simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Serve the HTTP and websocket API over a scenario.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Static console build served under `/`.
        #[arg(long)]
        console_dir: Option<PathBuf>,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
    /// Every inverse kinematics branch for one target.
    Ik {
        /// Link lengths L1,L2,L3 in meters.
        #[arg(long, value_parser = parse_triple)]
        links: [f64; 3],
        /// Target x,y,z in meters.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        target: [f64; 3],
    },
    /// Annotation dataset tools.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Match an utterance against the command vocabulary.
    Match {
        utterance: String,
        /// Vocabulary file; the built-in vocabulary when omitted.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Number of candidates.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Run a scenario file and emit its report.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Image count, per-class totals and the objects-per-image histogram.
    Summarize { dir: PathBuf },
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    };
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("{p:?} is not a number"));
    Ok([num(a)?, num(b)?, num(c)?])
}

/// A domain failure: its name and a one-line detail.
#[derive(Debug)]
pub struct Failure {
    pub name: String,
    pub detail: String,
}

impl Failure {
    fn new(name: &str, detail: impl Display) -> Self {
        Self {
            name: name.to_string(),
            detail: detail.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
struct IkBranch {
    branch: ElbowBranch,
    radians: [f64; 3],
    degrees: [f64; 3],
    end_effector: WorldPoint,
}

#[derive(Debug, Serialize)]
struct IkReport {
    links: [f64; 3],
    target: WorldPoint,
    solutions: Vec<IkBranch>,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("result documents serialize")
}

fn ik(links: [f64; 3], target: [f64; 3]) -> Result<String, Failure> {
    let g = ArmGeometry::new(links[0], links[1], links[2]).map_err(|e| Failure::new(e.name(), &e))?;
    let target = WorldPoint::new(target[0], target[1], target[2]);
    let solutions = ik_all_solutions(&g, &target);
    if solutions.is_empty() {
        // report why the first branch failed
        let err = ElbowBranch::BOTH
            .iter()
            .find_map(|b| inverse_kinematics(&g, &target, *b).err())
            .expect("no solutions means both branches failed");
        return Err(Failure::new(err.name(), &err));
    }
    let solutions = solutions
        .iter()
        .map(|s| {
            let q: JointAngles = s.joints;
            IkBranch {
                branch: s.branch,
                radians: q.as_array(),
                degrees: q.as_array().map(f64::to_degrees),
                end_effector: forward_kinematics(&g, &q),
            }
        })
        .collect();
    Ok(json(&IkReport {
        links,
        target,
        solutions,
    }))
}

fn sim_run(path: &Path, seed: Option<u64>, report: Option<&Path>, err: &mut dyn Write) -> Result<Option<String>, Failure> {
    let scenario = parse_scenario(&read(path)?).map_err(|e| Failure::new(e.name(), &e))?;
    let result = scenario.run(seed);
    let text = result.to_json();
    for o in &result.outcomes {
        let _ = writeln!(
            err,
            "{:?} {:?} [{:.2} s .. {:.2} s]{}",
            o.utterance,
            o.status,
            o.started,
            o.finished,
            o.error.as_ref().map(|e| format!(" {e}")).unwrap_or_default()
        );
    }
    match report {
        Some(out) => {
            std::fs::write(out, text + "\n")
                .map_err(|e| Failure::new("Io", format!("{}: {e}", out.display())))?;
            let _ = writeln!(err, "report written to {}", out.display());
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn serve(
    path: &Path,
    addr: SocketAddr,
    console_dir: Option<PathBuf>,
    time_scale: f64,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    if !(time_scale >= 0.0) || !time_scale.is_finite() {
        return Err(Failure::new("InvalidTimeScale", format!("{time_scale} must be finite and non-negative")));
    }
    let text = read(path)?;
    let config = ServiceConfig {
        time_scale,
        console_dir,
        ..ServiceConfig::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new("Io", e))?;
    runtime.block_on(async {
        let service = Service::start(config, Some(&text)).map_err(|e| Failure::new(e.name(), &e))?;
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::new("Io", format!("{addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::new("Io", e))?;
        let _ = writeln!(err, "listening on http://{local} (no authentication)");
        service.serve(listener).await.map_err(|e| Failure::new("Io", e))
    })
}

fn match_command(utterance: &str, vocab: Option<&Path>, n: usize) -> Result<String, Failure> {
    let vocabulary = match vocab {
        Some(p) => load_vocabulary(&read(p)?).map_err(|e| Failure::new(e.name(), &e))?,
        None => Vocabulary::default_vocabulary(),
    };
    let candidates = match_utterance(&vocabulary, &Utterance::from_text(utterance), n)
        .map_err(|e| Failure::new(e.name(), &e))?;
    Ok(json(&candidates))
}

/// Runs one parsed invocation, writing the result document to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let document = match cli.command {
        Command::Sim(SimCommand::Run { scenario, seed, report }) => sim_run(&scenario, seed, report.as_deref(), err)?,
        Command::Serve {
            scenario,
            port,
            bind,
            console_dir,
            time_scale,
        } => {
            serve(&scenario, SocketAddr::new(bind, port), console_dir, time_scale, err)?;
            None
        }
        Command::Ik { links, target } => Some(ik(links, target)?),
        Command::Dataset(DatasetCommand::Summarize { dir }) => {
            let summary = summarize_dir(&dir).map_err(|e| Failure::new(e.name(), &e))?;
            Some(json(&summary))
        }
        Command::Match { utterance, vocab, n } => Some(match_command(&utterance, vocab.as_deref(), n as usize)?),
    };
    if let Some(doc) = document {
        writeln!(out, "{doc}").map_err(|e| Failure::new("Io", e))?;
    }
    Ok(())
}

/// Parses `args` (program name first) and runs them.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match execute(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}: {}", f.name, f.detail);
            ExitCode::from(1)
        }
    }
}
