//! Command-line front end for `coarse-core`.
//!
//! [`run`] parses an argument list, dispatches to a command and renders a
//! [`Report`]. Reports are byte-stable for identical inputs unless `--timing`
//! is given.

pub mod args;
pub mod commands;
pub mod fixtures;
pub mod pipeline;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use coarse_core::{Certificate, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use report::{Outcome, Report};

/// Exit status for a usage error.
pub const EXIT_USAGE: i32 = 64;

/// Failure of a command before a report could be completed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

/// What a command hands back to [`run`].
#[derive(Debug, Default)]
pub struct Output {
    pub certificate: Certificate,
    pub result: Value,
    /// Written to `--out` when given.
    pub artifact: Option<Value>,
}

/// Per-invocation state: global flags and the digests of every file read.
pub struct Ctx {
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, String>,
}

impl Ctx {
    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> CmdResult<T> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        serde_json::from_slice(&bytes)
            .map_err(|e| Failure::Core(Error::invalid(format!("{}: {e}", path.display()))))
    }

    /// ChaCha8 stream seeded from `--seed`; commands that need randomness require the flag.
    pub fn rng(&self, what: &str) -> CmdResult<ChaCha8Rng> {
        self.seed
            .map(ChaCha8Rng::seed_from_u64)
            .ok_or_else(|| Failure::Usage(format!("{what} needs --seed")))
    }
}

/// Runs the command line `argv` (without the program name).
pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let parsed = match args::Cli::try_parse_from(std::iter::once("coarse-lab".to_string()).chain(argv.clone())) {
        Ok(p) => p,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    configure_threads();
    let start = Instant::now();
    let mut ctx = Ctx { seed: parsed.seed, inputs: BTreeMap::new() };
    let outcome = commands::dispatch(&parsed.command, &mut ctx);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut report = Report::new(argv, ctx.inputs);
    let mut stderr = String::new();
    match outcome {
        Ok(out) => {
            if let (Some(path), Some(artifact)) = (&parsed.out, &out.artifact) {
                if let Err(e) = write_artifact(path, artifact) {
                    report.fail(&Error::invalid(e));
                }
            }
            report.complete(out.certificate, out.result);
        }
        Err(Failure::Usage(msg)) => {
            return Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {msg}\n") };
        }
        Err(Failure::Core(e)) => {
            stderr = format!("error: {e}\n");
            report.fail(&e);
        }
    }
    if parsed.timing {
        report.wall_time_ms = Some(elapsed);
    }
    let stdout = match parsed.format {
        args::Format::Json => report.to_json(),
        args::Format::Summary => report.to_summary(),
    };
    Outcome { code: report.exit_code(), stdout, stderr }
}

fn write_artifact(path: &PathBuf, artifact: &Value) -> std::result::Result<(), String> {
    let text = serde_json::to_string_pretty(artifact).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Caps rayon's pool at `COARSE_LAB_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("COARSE_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call in the same process finds the pool already built; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
