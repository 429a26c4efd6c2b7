//! Machine-readable run summaries.
//!
//! Every run writes `<name>.summary.json` (and prints the same bytes to
//! stdout) holding: a schema tag, the subcommand, whether all thresholds
//! held, the domain parameters, the fully resolved configuration echo, and
//! the per-command results.  The echo pins every parameter that influences
//! the numbers — worker counts and output locations are deliberately left
//! out because they do not — so feeding the document back through
//! `--config` replays the run byte for byte.
//!
//! Wall-clock time goes to stderr only, for the same reason.

use std::collections::BTreeMap;

use bergman_core::EllipsoidSpec;
use serde::Serialize;

/// Version tag carried by every summary document.
pub const SCHEMA: &str = "bergman-lab/1";

/// Domain parameters of the run.
#[derive(Serialize)]
pub struct SpecEcho {
    pub exponents: Vec<f64>,
    pub dim: usize,
    pub volume: f64,
}

impl SpecEcho {
    pub fn new(spec: &EllipsoidSpec) -> Self {
        Self {
            exponents: spec.exponents().to_vec(),
            dim: spec.dim(),
            volume: spec.volume(),
        }
    }
}

/// The summary document; `result` is the subcommand-specific payload.
#[derive(Serialize)]
pub struct Summary<R: Serialize> {
    pub schema: &'static str,
    pub subcommand: &'static str,
    pub pass: bool,
    pub spec: SpecEcho,
    pub config: BTreeMap<String, String>,
    pub result: R,
}

impl<R: Serialize> Summary<R> {
    /// Pretty-printed JSON with a trailing newline.  Field order is fixed
    /// by the struct, map keys are sorted, and floats use the shortest
    /// round-trip rendering, so equal runs produce equal bytes.
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}
