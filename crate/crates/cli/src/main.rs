//! `ncgtwist`: runs one family of verification checks and writes a
//! JSON-lines report.

mod checks;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{ConfigError, RunConfig};
use report::{header, Record};

#[derive(Parser)]
#[command(
    name = "ncgtwist",
    version,
    about = "Twisted entire cyclic cohomology workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random stream; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the checks (name, tolerance, kind) instead of running them.
    #[arg(long, global = true)]
    list_checks: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// b² = 0, B² = 0, bB + Bb = 0 and σ-invariance on random algebras.
    VerifyComplex,
    /// Exact vs quadrature heat functional, its bound and its six identities.
    VerifyJlo,
    /// Closedness of twisted Chern characters of synthetic data.
    VerifyCocycle,
    /// Haar state oracle, recovery through the twisted trace, Woronowicz data.
    Suq2Haar,
    /// Invariance of the twisted heat functional and the fixed-point algebra.
    Suq2Invariance,
    /// Local growth exponents of the canonical twist (diagnostic).
    GrowthProbe,
    /// Pairings of synthetic characters with projections.
    PairingSynthetic,
    /// Odd pairing of the SU_q(2) character with u (exploratory).
    PairingSuq2,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyComplex => "verify-complex",
            Command::VerifyJlo => "verify-jlo",
            Command::VerifyCocycle => "verify-cocycle",
            Command::Suq2Haar => "suq2-haar",
            Command::Suq2Invariance => "suq2-invariance",
            Command::GrowthProbe => "growth-probe",
            Command::PairingSynthetic => "pairing-synthetic",
            Command::PairingSuq2 => "pairing-suq2",
        }
    }
}

fn threads() -> Result<usize, ConfigError> {
    match std::env::var("NCGTWIST_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            ConfigError(format!(
                "NCGTWIST_THREADS must be a positive integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn emit(out: Option<&PathBuf>, lines: &[String]) -> std::io::Result<()> {
    let mut body = lines.join("\n");
    body.push('\n');
    match out {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

fn line(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("records serialize")
}

fn list(cfg: &RunConfig) -> Vec<String> {
    checks::checks(cfg)
        .iter()
        .map(|c| {
            line(&serde_json::json!({
                "command": cfg.command,
                "check": c.name,
                "tolerance": c.tolerance.is_finite().then_some(c.tolerance),
                "bound": c.bound,
                "asserted": c.asserted,
            }))
        })
        .collect()
}

fn run(cli: &Cli, command: &str) -> Result<(Vec<String>, bool), ConfigError> {
    let cfg = RunConfig::load(command, cli.config.as_deref(), cli.seed)?;
    let list_of_checks = checks::checks(&cfg);
    for name in cfg.tolerances.keys() {
        if !list_of_checks.iter().any(|c| &c.name == name) {
            return Err(ConfigError(format!(
                "tolerance given for unknown check {name:?}"
            )));
        }
    }
    let n = threads()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    let records: Vec<Record> =
        pool.install(|| list_of_checks.par_iter().map(|c| c.execute(&cfg)).collect());
    let failed = records.iter().any(Record::fails_run);
    let mut lines = vec![line(&header(command, Some(cfg.seed), n))];
    lines.extend(records.iter().map(line));
    Ok((lines, failed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_checks {
        let commands: Vec<&str> = match cli.command {
            Some(c) => vec![c.name()],
            None => checks::COMMANDS.to_vec(),
        };
        let mut lines = Vec::new();
        for c in commands {
            match RunConfig::load(c, cli.config.as_deref(), cli.seed) {
                Ok(cfg) => lines.extend(list(&cfg)),
                Err(e) => {
                    eprintln!("config error: {e}");
                    lines.push(line(&Record::config_error(c, &e.0)));
                    let _ = emit(cli.out.as_ref(), &lines);
                    return ExitCode::from(2);
                }
            }
        }
        return match emit(cli.out.as_ref(), &lines) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("cannot write report: {e}");
                ExitCode::from(2)
            }
        };
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(2);
    };
    let command = command.name();
    let (lines, code) = match run(&cli, command) {
        Ok((lines, failed)) => (lines, if failed { 1 } else { 0 }),
        Err(e) => {
            eprintln!("config error: {e}");
            let lines = vec![
                line(&header(command, cli.seed, 0)),
                line(&Record::config_error(command, &e.0)),
            ];
            (lines, 2)
        }
    };
    if let Err(e) = emit(cli.out.as_ref(), &lines) {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
