//! Configuration, initial conditions and experiment presets behind the
//! `nsch` binary.
//!
//! A run is described by a JSON [`RunConfig`]; [`execute`] generates the
//! initial state, runs the requested [`Preset`] and writes the CSV
//! diagnostics and a JSON report (with a metadata block) into an output
//! directory.

pub mod config;
pub mod error;
pub mod ic;
pub mod presets;

pub use config::{Overrides, Preset, RunConfig};
pub use error::CliError;
pub use ic::{generate_ic, IcKind};
pub use presets::{execute, Report};

use nsch_core::diagnostics::csv_header;

/// Static description of the tool: presets, generators, exit codes and an
/// example configuration.
pub fn info() -> serde_json::Value {
    let example = RunConfig::example();
    serde_json::json!({
        "name": "nsch",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": config::SCHEMA_VERSION,
        "presets": Preset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "ic_kinds": IcKind::ALL,
        "csv_columns": csv_header(&example.diagnostics),
        "exit_codes": {
            "0": "success",
            "1": "i/o or runtime failure",
            "2": "configuration error",
            "3": "time stepping diverged",
            "4": "inequality violation",
        },
        "example_config": example,
    })
}
