//! Built-in scenarios. The JSON files under `scenarios/` are these values
//! serialised.

use hap_core::decomposition::DecompositionParams;
use hap_core::motion::MotionParams;
use hap_core::sequencer::SequencingParams;
use hap_core::{Aabb, ArmModel, Shape, TaskPoint, Vec2};

use crate::scenario::{BenchConfig, Scenario, TaskRegion, SCHEMA_VERSION};

/// Two-link arm over a quarter annulus with one obstacle on each side of
/// the band. Each obstacle blocks one elbow branch over part of the band,
/// so no single branch covers it.
pub fn band() -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        seed: 7,
        arm: ArmModel::planar(&[1.0, 0.8]),
        obstacles: vec![
            Shape::circle((-0.45, 0.95), 0.2),
            Shape::circle((0.95, -0.35), 0.2),
        ],
        online_obstacles: vec![],
        task_region: TaskRegion {
            bounds: Aabb::new(Vec2::new(0.2, 0.2), Vec2::new(1.4, 1.4)),
            spacing: 0.1,
            radial_band: Some([0.8, 1.6]),
            connection_radius: Some(0.11),
            edge_check_count: 5,
        },
        home: Vec2::new(1.0, 0.7),
        base_poses: vec![],
        decomposition: DecompositionParams {
            epsilon: 0.35,
            max_subspaces: 5,
            ..Default::default()
        },
        sequencing: SequencingParams::default(),
        motion: MotionParams::default(),
        bench: BenchConfig::default(),
        record_timings: false,
    }
}

/// Four tasks in the band scenario: two reachable by one elbow branch only,
/// two by both, where the first IK solution is the other branch.
pub fn band_tasks() -> Vec<TaskPoint> {
    vec![
        TaskPoint::new(1.3, 0.3),
        TaskPoint::new(0.9, 0.9),
        TaskPoint::new(1.2, 0.5),
        TaskPoint::new(0.75, 1.0),
    ]
}

/// The band scene plus two obstacles that appear only online.
pub fn bench() -> Scenario {
    Scenario {
        online_obstacles: vec![
            Shape::rect((0.5, 0.45), (0.7, 0.65)),
            Shape::circle((1.35, 0.85), 0.12),
        ],
        ..band()
    }
}
