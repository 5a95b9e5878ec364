//! Shared fixtures for the benchmarks: the two-branch band scene at a
//! coarser grid so one decomposition fits in a benchmark iteration.

use hap_core::{
    build_graph, build_task_grid, decompose, Aabb, ArmModel, Decomposition, DecompositionParams,
    Scene, Shape, TaskGraph, TaskPoint, Vec2,
};

pub struct Fixture {
    pub arm: ArmModel,
    pub scene: Scene,
    pub graph: TaskGraph,
    pub params: DecompositionParams,
}

impl Fixture {
    pub fn new(spacing: f64) -> Self {
        let arm = ArmModel::planar(&[1.0, 0.8]);
        let scene = Scene::new([Shape::circle((-0.45, 0.95), 0.2), Shape::circle((0.95, -0.35), 0.2)]);
        let region = Aabb::new(Vec2::new(0.2, 0.2), Vec2::new(1.4, 1.4));
        let points: Vec<TaskPoint> = build_task_grid(&region, spacing)
            .unwrap()
            .into_iter()
            .filter(|p| (0.8..=1.6).contains(&p.position.norm()))
            .collect();
        let (graph, _) = build_graph(&points, spacing * 1.1, &arm, &scene, 8).unwrap();
        let params = DecompositionParams {
            epsilon: 0.35,
            rng_seed: 7,
            ..DecompositionParams::default()
        };
        Self { arm, scene, graph, params }
    }

    pub fn decomposition(&self) -> Decomposition {
        decompose(&self.graph, &self.params).unwrap()
    }

    pub fn home(&self) -> TaskPoint {
        TaskPoint::new(1.0, 0.7)
    }

    /// Deterministic spread of reachable task points.
    pub fn tasks(&self, n: usize) -> Vec<TaskPoint> {
        let nodes = &self.graph.nodes;
        (0..n).map(|i| nodes[(i * 7919) % nodes.len()]).collect()
    }
}
