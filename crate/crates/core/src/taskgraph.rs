//! Discretised task space and its ball-radius graph.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec2};
use crate::kinematics::{ik_solutions, task_distance, ArmModel, JointConfig, TaskPoint};
use crate::world::Scene;

pub const DEFAULT_EDGE_CHECK_COUNT: usize = 5;
/// Default connection radius as a multiple of the grid spacing.
pub const DEFAULT_RADIUS_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TaskGraphData", into = "TaskGraphData")]
pub struct TaskGraph {
    pub nodes: Vec<TaskPoint>,
    /// Index of each node in the point list the graph was built from.
    pub source_index: Vec<usize>,
    pub ik_sets: Vec<Vec<JointConfig>>,
    /// Sorted by `(a, b)` with `a < b`.
    pub edges: Vec<Edge>,
    pub connection_radius: f64,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct TaskGraphData {
    nodes: Vec<TaskPoint>,
    source_index: Vec<usize>,
    ik_sets: Vec<Vec<JointConfig>>,
    edges: Vec<Edge>,
    connection_radius: f64,
}

impl From<TaskGraphData> for TaskGraph {
    fn from(d: TaskGraphData) -> Self {
        TaskGraph::from_parts(d.nodes, d.source_index, d.ik_sets, d.edges, d.connection_radius)
    }
}

impl From<TaskGraph> for TaskGraphData {
    fn from(g: TaskGraph) -> Self {
        TaskGraphData {
            nodes: g.nodes,
            source_index: g.source_index,
            ik_sets: g.ik_sets,
            edges: g.edges,
            connection_radius: g.connection_radius,
        }
    }
}

/// Reported (not fatal) when the graph splits into several components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandWarning {
    pub component_count: usize,
    pub component_sizes: Vec<usize>,
}

impl TaskGraph {
    pub fn from_parts(
        nodes: Vec<TaskPoint>,
        source_index: Vec<usize>,
        ik_sets: Vec<Vec<JointConfig>>,
        mut edges: Vec<Edge>,
        connection_radius: f64,
    ) -> Self {
        for e in edges.iter_mut() {
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
        }
        for adj in adjacency.iter_mut() {
            adj.sort_by_key(|(n, _)| *n);
        }
        Self {
            nodes,
            source_index,
            ik_sets,
            edges,
            connection_radius,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Neighbours with their d_T weight, in ascending index order.
    pub fn neighbors(&self, n: usize) -> &[(usize, f64)] {
        &self.adjacency[n]
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .binary_search_by_key(&b, |(n, _)| *n)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    /// Sizes of connected components, ordered by smallest member index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(n) = queue.pop_front() {
                for &(m, _) in self.neighbors(n) {
                    if !seen[m] {
                        seen[m] = true;
                        comp.push(m);
                        queue.push_back(m);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn island_warning(&self) -> Option<IslandWarning> {
        let comps = self.components();
        (comps.len() > 1).then(|| IslandWarning {
            component_count: comps.len(),
            component_sizes: comps.iter().map(Vec::len).collect(),
        })
    }

    /// Nodes ordered by distance to `p` (ties by index), first `k`.
    pub fn nearest(&self, p: Vec2, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.nodes[a]
                .position
                .distance(p)
                .total_cmp(&self.nodes[b].position.distance(p))
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx
    }
}

/// Row-major lattice over `region`, boundary rows/columns included.
pub fn build_task_grid(region: &Aabb, spacing: f64) -> Result<Vec<TaskPoint>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidInput("grid spacing must be positive".into()));
    }
    if !(region.width() >= 0.0 && region.height() >= 0.0)
        || (region.width() == 0.0 && region.height() == 0.0)
    {
        return Err(Error::InvalidInput("task region is degenerate".into()));
    }
    let nx = (region.width() / spacing + 1e-9).floor() as usize + 1;
    let ny = (region.height() / spacing + 1e-9).floor() as usize + 1;
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            pts.push(TaskPoint::new(
                region.min.x + i as f64 * spacing,
                region.min.y + j as f64 * spacing,
            ));
        }
    }
    Ok(pts)
}

fn edge_feasible(
    a: &TaskPoint,
    b: &TaskPoint,
    arm: &ArmModel,
    scene: &Scene,
    checks: usize,
) -> bool {
    (0..checks).all(|i| {
        let s = i as f64 / (checks - 1) as f64;
        let p = TaskPoint {
            position: a.position.lerp(b.position, s),
            base_index: a.base_index,
        };
        !ik_solutions(arm, &p, scene).is_empty()
    })
}

/// Builds G over the reachable subset of `points`. Returns the graph and an
/// island warning when it is disconnected.
pub fn build_graph(
    points: &[TaskPoint],
    radius: f64,
    arm: &ArmModel,
    scene: &Scene,
    edge_check_count: usize,
) -> Result<(TaskGraph, Option<IslandWarning>)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("connection radius must be positive".into()));
    }
    if edge_check_count < 2 {
        return Err(Error::InvalidInput("edge_check_count must be at least 2".into()));
    }
    let ik: Vec<Vec<JointConfig>> = points
        .par_iter()
        .map(|p| ik_solutions(arm, p, scene))
        .collect();
    let mut nodes = Vec::new();
    let mut source_index = Vec::new();
    let mut ik_sets = Vec::new();
    for (i, (p, q)) in points.iter().zip(ik).enumerate() {
        if !q.is_empty() {
            nodes.push(*p);
            source_index.push(i);
            ik_sets.push(q);
        }
    }
    let n = nodes.len();
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let d = task_distance(&nodes[i], &nodes[j]).ok()?;
            (d <= radius).then_some((i, j, d))
        })
        .collect();
    let edges: Vec<Edge> = pairs
        .par_iter()
        .filter(|(i, j, _)| edge_feasible(&nodes[*i], &nodes[*j], arm, scene, edge_check_count))
        .map(|&(a, b, weight)| Edge { a, b, weight })
        .collect();
    let graph = TaskGraph::from_parts(nodes, source_index, ik_sets, edges, radius);
    let warning = graph.island_warning();
    Ok((graph, warning))
}
