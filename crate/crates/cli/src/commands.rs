//! Subcommand implementations. Each returns the process exit code.

use std::path::Path;

use serde::Serialize;

use crate::artifact::{build_artifact, run_sequence, verify_decomposition, verify_options, Artifact, PlanRecord, ARTIFACT_KIND, PLAN_KIND};
use crate::bench::{partial_path, run_bench, summary_table};
use crate::error::CliError;
use crate::render::{render_artifact, render_plan};
use crate::scenario::{load_scenario, load_tasks, parse_json, read_json, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_UNPLANNABLE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Table,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serialises");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn scenario_with_seed(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn load_artifact(path: &Path) -> Result<Artifact, CliError> {
    let a: Artifact = read_json(path)?;
    if a.kind != ARTIFACT_KIND {
        return Err(CliError::Input(format!("{}: not a decomposition artifact", path.display())));
    }
    a.scenario.validate()?;
    Ok(a)
}

fn emit(format: Format, json: serde_json::Value, table: String) {
    match format {
        Format::Json => println!("{json}"),
        Format::Table => print!("{table}"),
    }
}

pub fn decompose(scenario: &Path, out: &Path, seed: Option<u64>, format: Format) -> Result<i32, CliError> {
    let s = scenario_with_seed(scenario, seed)?;
    let a = build_artifact(&s)?;
    write_json(out, &a)?;
    let d = &a.decomposition;
    let mut table = format!(
        "maps {}  coverage {:.4}  termination {:?}\n",
        d.maps.len(),
        d.coverage,
        d.termination
    );
    for (i, (m, r)) in d.maps.iter().zip(&a.verification).enumerate() {
        table += &format!(
            "map {i}: nodes {:>5}  objective {:>10.4}  max edge gap {:.4}  clean {}\n",
            m.assigned_count(),
            m.objective,
            r.max_edge_gap,
            r.is_clean()
        );
    }
    if let Some(w) = &a.island_warning {
        table += &format!("warning: task graph has {} components\n", w.component_count);
    }
    emit(
        format,
        serde_json::json!({
            "maps": d.maps.len(),
            "coverage": d.coverage,
            "termination": d.termination,
            "verification_clean": a.verification_clean(),
        }),
        table,
    );
    Ok(if !a.verification_clean() {
        EXIT_VERIFY
    } else if d.is_partial() {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    })
}

pub fn sequence(artifact: &Path, tasks: &Path, out: &Path, seed: Option<u64>, format: Format) -> Result<i32, CliError> {
    let mut a = load_artifact(artifact)?;
    if let Some(seed) = seed {
        a.scenario.seed = seed;
    }
    let tasks = load_tasks(tasks)?;
    let rec = run_sequence(&a, &tasks)?;
    write_json(out, &rec)?;
    let s = &rec.summary;
    emit(
        format,
        serde_json::to_value(s).expect("summary serialises"),
        format!(
            "tasks {}  unplanned {}  legs {}/{} ok ({} fallback)  seed cost {:.4}  exec {:.3} s  max jerk {:.2}\n",
            s.tasks, s.unplanned_tasks, s.successful_legs, s.legs, s.fallback_legs, s.seed_config_cost, s.exec_time, s.max_jerk
        ),
    );
    Ok(if rec.fully_planned() { EXIT_OK } else { EXIT_UNPLANNABLE })
}

pub fn bench(scenario: &Path, out: &Path, seed: Option<u64>, format: Format) -> Result<i32, CliError> {
    let s = scenario_with_seed(scenario, seed)?;
    let partial = partial_path(out);
    let report = run_bench(&s, Some(&partial))?;
    write_json(out, &report)?;
    let _ = std::fs::remove_file(&partial);
    emit(
        format,
        serde_json::to_value(&report.summary).expect("summary serialises"),
        summary_table(&report),
    );
    Ok(EXIT_OK)
}

pub fn render(input: &Path, out: &Path) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let what = input.display().to_string();
    let value: serde_json::Value = parse_json(&text, &what)?;
    let svg = match value.get("kind").and_then(|k| k.as_str()) {
        Some(ARTIFACT_KIND) => render_artifact(&parse_json::<Artifact>(&text, &what)?),
        Some(PLAN_KIND) => render_plan(&parse_json::<PlanRecord>(&text, &what)?),
        _ => return Err(CliError::Input(format!("{what}: expected a decomposition artifact or a plan record"))),
    };
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))?;
    Ok(EXIT_OK)
}

pub fn verify(artifact: &Path, out: Option<&Path>, format: Format) -> Result<i32, CliError> {
    let a = load_artifact(artifact)?;
    let reports = verify_decomposition(&a.decomposition, &verify_options(&a.scenario));
    if let Some(out) = out {
        write_json(out, &reports)?;
    }
    let clean = reports.iter().all(|r| r.is_clean());
    let mut table = String::new();
    for (i, r) in reports.iter().enumerate() {
        table += &format!(
            "map {i}: assignment {}  edge {}  hop {}  geodesic {}  (edges {}, pairs {}, geodesics {})\n",
            r.assignment_violations.len(),
            r.edge_violations.len(),
            r.hop_bound_violations.len(),
            r.geodesic_bound_violations.len(),
            r.edges_checked,
            r.pairs_checked,
            r.geodesics_checked
        );
        for e in &r.edge_violations {
            table += &format!("  edge {} -> {} gap {:.6}\n", e.child, e.parent, e.gap);
        }
    }
    emit(
        format,
        serde_json::json!({ "clean": clean, "reports": reports }),
        table,
    );
    Ok(if clean { EXIT_OK } else { EXIT_VERIFY })
}
