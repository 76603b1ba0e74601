//! Experiment runner for `spike4-core`: TOML configs in, JSON reports and
//! CSV tables out.

pub mod config;
pub mod drivers;
pub mod report;

use config::{Kind, RunConfig};
use report::{RunReport, Table, SCHEMA};

/// Runs `cfg` and assembles the report. Solver failures are recorded as
/// failed assertions; nothing here touches the filesystem.
pub fn run(kind: Kind, cfg: &RunConfig) -> (RunReport, Vec<Table>) {
    let out = drivers::run(kind, cfg);
    let report = RunReport {
        schema: SCHEMA,
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: kind.name().to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        all_pass: out.all_pass(),
        results: out.results,
        assertions: out.assertions,
        timings_ms: out.timings_ms,
    };
    (report, out.tables)
}
