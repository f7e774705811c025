//! Check definitions and the JSON-lines records they produce.

use std::time::Instant;

use ncgtwist_core::rng::named_stream;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

/// How `defect` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass iff `defect ≤ tolerance`.
    Upper,
    /// Pass iff `defect ≥ tolerance`.
    Lower,
}

/// What a check measured. `extra_tolerance` is added to the configured
/// tolerance (truncation tails known only after the computation).
#[derive(Debug, Clone, Default)]
pub struct Measured {
    pub defect: f64,
    pub extra_tolerance: f64,
    /// Overrides the tolerance comparison, for diagnostics with a
    /// qualitative verdict.
    pub verdict: Option<bool>,
    pub fields: Map<String, Value>,
}

impl Measured {
    pub fn new(defect: f64) -> Self {
        Measured {
            defect,
            ..Default::default()
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.fields.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn tail(mut self, tail: f64) -> Self {
        self.extra_tolerance = tail;
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.verdict = Some(pass);
        self
    }
}

pub type CheckFn = Box<dyn Fn(&mut ChaCha8Rng) -> ncgtwist_core::Result<Measured> + Send + Sync>;

pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub bound: Bound,
    /// Diagnostic checks never affect the exit code.
    pub asserted: bool,
    pub params: Map<String, Value>,
    pub run: CheckFn,
}

impl Check {
    pub fn new(
        name: &str,
        tolerance: f64,
        params: Value,
        run: impl Fn(&mut ChaCha8Rng) -> ncgtwist_core::Result<Measured> + Send + Sync + 'static,
    ) -> Self {
        Check {
            name: name.to_string(),
            tolerance,
            bound: Bound::Upper,
            asserted: true,
            params: match params {
                Value::Object(m) => m,
                _ => Map::new(),
            },
            run: Box::new(run),
        }
    }

    pub fn lower(mut self) -> Self {
        self.bound = Bound::Lower;
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.asserted = false;
        self
    }

    fn stream(&self, cfg: &RunConfig) -> String {
        format!("{}/{}", cfg.command, self.name)
    }

    pub fn execute(&self, cfg: &RunConfig) -> Record {
        let tolerance = cfg.tolerance(&self.name, self.tolerance);
        let mut rng = named_stream(cfg.seed, &self.stream(cfg));
        let started = Instant::now();
        let outcome = (self.run)(&mut rng);
        let runtime_ms = started.elapsed().as_millis() as u64;
        let provenance = self.provenance(cfg);
        match outcome {
            Ok(m) => {
                let tolerance = tolerance + m.extra_tolerance;
                let within = match self.bound {
                    Bound::Upper => m.defect <= tolerance,
                    Bound::Lower => m.defect >= tolerance,
                };
                Record {
                    check: self.name.clone(),
                    defect: finite(m.defect),
                    tolerance: finite(tolerance),
                    pass: m.verdict.unwrap_or(within),
                    runtime_ms,
                    provenance,
                    asserted: self.asserted,
                    bound: self.bound,
                    fields: m.fields,
                    error: None,
                }
            }
            Err(e) => Record {
                check: self.name.clone(),
                defect: None,
                tolerance: finite(tolerance),
                pass: false,
                runtime_ms,
                provenance,
                asserted: self.asserted,
                bound: self.bound,
                fields: Map::new(),
                error: Some(ErrorInfo {
                    kind: "ModuleError".into(),
                    message: e.to_string(),
                }),
            },
        }
    }

    pub fn provenance(&self, cfg: &RunConfig) -> Value {
        serde_json::json!({
            "command": cfg.command,
            "seed": cfg.seed,
            "stream": self.stream(cfg),
            "version": env!("CARGO_PKG_VERSION"),
            "params": self.params,
        })
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

/// One line of the report.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub check: String,
    pub defect: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub runtime_ms: u64,
    pub provenance: Value,
    pub asserted: bool,
    pub bound: Bound,
    #[serde(flatten)]
    pub fields: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Record {
    pub fn config_error(command: &str, message: &str) -> Record {
        Record {
            check: "config".into(),
            defect: None,
            tolerance: None,
            pass: false,
            runtime_ms: 0,
            provenance: serde_json::json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
            }),
            asserted: true,
            bound: Bound::Upper,
            fields: Map::new(),
            error: Some(ErrorInfo {
                kind: "ConfigError".into(),
                message: message.into(),
            }),
        }
    }

    /// Whether this record makes the run fail.
    pub fn fails_run(&self) -> bool {
        self.asserted && !self.pass
    }
}

/// First line of every report; the only line carrying a timestamp.
pub fn header(command: &str, seed: Option<u64>, threads: usize) -> Value {
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    serde_json::json!({
        "header": {
            "tool": "ncgtwist",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "threads": threads,
            "started_unix_ms": started,
        }
    })
}
