//! Writes the built-in scenarios to `crates/cli/scenarios/`.

use hap_cli::commands::write_json;
use hap_cli::presets;
use hap_cli::scenario::{TaskFile, SCHEMA_VERSION};

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    write_json(&dir.join("band.json"), &presets::band()).unwrap();
    write_json(&dir.join("bench.json"), &presets::bench()).unwrap();
    let tasks = TaskFile {
        schema_version: SCHEMA_VERSION,
        tasks: presets::band_tasks().iter().map(|t| t.position).collect(),
    };
    write_json(&dir.join("band_tasks.json"), &tasks).unwrap();
}
