//! Scenario files: everything needed to reproduce a decomposition, a
//! sequencing run or a benchmark sweep.

use std::path::Path;

use hap_core::decomposition::DecompositionParams;
use hap_core::motion::MotionParams;
use hap_core::sequencer::SequencingParams;
use hap_core::taskgraph::{build_task_grid, DEFAULT_EDGE_CHECK_COUNT, DEFAULT_RADIUS_FACTOR};
use hap_core::{Aabb, ArmModel, Scene, Shape, TaskPoint, Vec2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRegion {
    pub bounds: Aabb,
    pub spacing: f64,
    /// Keep only grid points whose distance to the arm base lies in
    /// `[inner, outer]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_band: Option<[f64; 2]>,
    /// Defaults to `spacing * 1.1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection_radius: Option<f64>,
    #[serde(default = "default_edge_checks")]
    pub edge_check_count: usize,
}

fn default_edge_checks() -> usize {
    DEFAULT_EDGE_CHECK_COUNT
}

impl TaskRegion {
    pub fn radius(&self) -> f64 {
        self.connection_radius
            .unwrap_or(self.spacing * DEFAULT_RADIUS_FACTOR)
    }

    pub fn contains(&self, p: Vec2, base: Vec2) -> bool {
        self.bounds.contains(p)
            && self
                .radial_band
                .is_none_or(|[lo, hi]| (lo..=hi).contains(&p.distance(base)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub task_counts: Vec<usize>,
    pub trials: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            task_counts: vec![3, 5, 8],
            trials: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Drives root sampling, verification sampling, task sampling and the
    /// planners. Overrides `decomposition.rng_seed`.
    pub seed: u64,
    pub arm: ArmModel,
    #[serde(default)]
    pub obstacles: Vec<Shape>,
    #[serde(default)]
    pub online_obstacles: Vec<Shape>,
    pub task_region: TaskRegion,
    pub home: Vec2,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_poses: Vec<Vec2>,
    #[serde(default)]
    pub decomposition: DecompositionParams,
    #[serde(default)]
    pub sequencing: SequencingParams,
    #[serde(default)]
    pub motion: MotionParams,
    #[serde(default)]
    pub bench: BenchConfig,
    /// Wall-clock timings make reports machine dependent; off by default.
    #[serde(default)]
    pub record_timings: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.arm.validate()?;
        self.offline_scene().validate()?;
        self.scene().validate()?;
        self.decomposition.validate()?;
        let r = &self.task_region;
        let bad = |m: &str| Err(CliError::Input(m.to_string()));
        if !(r.spacing > 0.0) || !(r.radius() > 0.0) {
            return bad("task_region: spacing and connection_radius must be positive");
        }
        if r.edge_check_count < 2 {
            return bad("task_region: edge_check_count must be at least 2");
        }
        if matches!(r.radial_band, Some([lo, hi]) if !(lo >= 0.0 && lo <= hi)) {
            return bad("task_region: radial_band must satisfy 0 <= inner <= outer");
        }
        if r.radial_band.is_some() && !self.base_poses.is_empty() {
            return bad("task_region: radial_band is not supported with base_poses");
        }
        if !(self.sequencing.threshold >= 0.0) || self.sequencing.k == 0 {
            return bad("sequencing: k must be positive and threshold nonnegative");
        }
        let m = &self.motion;
        if !(m.step > 0.0 && m.dt > 0.0 && m.extend_step > 0.0 && m.fallback_timeout >= 0.0) {
            return bad("motion: step, dt and extend_step must be positive");
        }
        if !(m.repair_radius >= 0.0) {
            return bad("motion: repair_radius must be nonnegative");
        }
        if self.bench.task_counts.contains(&0) {
            return bad("bench: task counts must be positive");
        }
        Ok(())
    }

    pub fn offline_scene(&self) -> Scene {
        Scene::new(self.obstacles.iter().copied())
    }

    /// Offline plus online obstacles.
    pub fn scene(&self) -> Scene {
        Scene::new(self.obstacles.iter().copied()).with_online(self.online_obstacles.iter().copied())
    }

    pub fn decomposition_params(&self) -> DecompositionParams {
        DecompositionParams {
            rng_seed: self.seed,
            ..self.decomposition.clone()
        }
    }

    pub fn task_grid(&self) -> Result<Vec<TaskPoint>, CliError> {
        let grid = build_task_grid(&self.task_region.bounds, self.task_region.spacing)?;
        Ok(grid
            .into_iter()
            .filter(|p| self.task_region.contains(p.position, self.arm.base_position))
            .collect())
    }

    pub fn home_task(&self) -> TaskPoint {
        TaskPoint::new(self.home.x, self.home.y)
    }
}

/// Parses JSON, reporting the line and column of the first error.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!("{what}: {} (line {}, column {})", strip_position(&e), e.line(), e.column()))
    })
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let s: Scenario = read_json(path)?;
    s.validate()?;
    Ok(s)
}

/// Task list file for `sequence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub schema_version: u32,
    pub tasks: Vec<Vec2>,
}

pub fn load_tasks(path: &Path) -> Result<Vec<TaskPoint>, CliError> {
    let f: TaskFile = read_json(path)?;
    if f.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!("unsupported schema_version {}", f.schema_version)));
    }
    if f.tasks.iter().any(|p| !p.is_finite()) {
        return Err(CliError::Input("task coordinates must be finite".into()));
    }
    Ok(f.tasks.iter().map(|p| TaskPoint::new(p.x, p.y)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_points_at_line() {
        let text = "{\n  \"schema_version\": 1,\n  \"seed\": 3,\n  \"bogus\": true\n}";
        let err = parse_json::<Scenario>(text, "s.json").unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn seed_is_mandatory() {
        let mut v = serde_json::to_value(crate::presets::band()).unwrap();
        v.as_object_mut().unwrap().remove("seed");
        let err = parse_json::<Scenario>(&v.to_string(), "s").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn round_trip() {
        let s = crate::presets::bench();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(parse_json::<Scenario>(&text, "s").unwrap(), s);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut s = crate::presets::band();
        s.task_region.spacing = 0.0;
        assert!(s.validate().is_err());
        let mut s = crate::presets::band();
        s.schema_version = 9;
        assert!(s.validate().is_err());
        let mut s = crate::presets::band();
        s.decomposition.epsilon = -1.0;
        assert!(s.validate().is_err());
    }
}
