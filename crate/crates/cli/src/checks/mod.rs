//! Check lists per subcommand.

mod cocycle;
mod complex;
mod growth;
mod jlo;
mod suq2;

use crate::config::RunConfig;
use crate::report::Check;

pub const COMMANDS: [&str; 8] = [
    "verify-complex",
    "verify-jlo",
    "verify-cocycle",
    "suq2-haar",
    "suq2-invariance",
    "growth-probe",
    "pairing-synthetic",
    "pairing-suq2",
];

pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    match cfg.command.as_str() {
        "verify-complex" => complex::checks(cfg),
        "verify-jlo" => jlo::checks(cfg),
        "verify-cocycle" => cocycle::checks(cfg),
        "suq2-haar" => suq2::haar_checks(cfg),
        "suq2-invariance" => suq2::invariance_checks(cfg),
        "growth-probe" => growth::checks(cfg),
        "pairing-synthetic" => cocycle::pairing_checks(cfg),
        "pairing-suq2" => suq2::pairing_checks(cfg),
        other => unreachable!("unknown command {other}"),
    }
}
