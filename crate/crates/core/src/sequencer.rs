//! Online stage: match tasks to maps, order them per map and stitch the
//! retrieved configuration paths into legs.

mod tsp;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{Decomposition, GhaMap};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kinematics::{config_distance, ik_solutions, ArmModel, JointConfig, TaskPoint};
use crate::motion::{Trajectory, TrajectorySource};
use crate::taskgraph::TaskGraph;
use crate::world::Scene;

pub use tsp::{solve_tsp, tour_cost, EXACT_TSP_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequencingParams {
    /// Number of nearest mapped nodes compared against each task.
    pub k: usize,
    /// First map whose best similarity falls below this wins.
    pub threshold: f64,
}

impl Default for SequencingParams {
    fn default() -> Self {
        Self { k: 10, threshold: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMatch {
    pub task: TaskPoint,
    pub map_index: usize,
    pub matched_node: usize,
    /// Chosen IK solution of the task under the matched map's base.
    pub task_config: JointConfig,
    /// L2 distance between `task_config` and the matched node's config.
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    Home,
    Task(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub from: Stop,
    pub to: Stop,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_pose: Option<Vec2>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub map_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_pose: Option<Vec2>,
    pub home_config: JointConfig,
    /// Task indices in visiting order.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub home_config: JointConfig,
    pub groups: Vec<GroupPlan>,
    pub legs: Vec<Leg>,
    pub visit_order: Vec<Stop>,
    /// Sum of seed trajectory lengths in d_C.
    pub total_config_cost: f64,
    /// Indexed by task; `None` for unplanned tasks.
    pub matches: Vec<Option<TaskMatch>>,
    pub unplanned: Vec<usize>,
}

impl SequencePlan {
    /// Builds a plan visiting `stops` (task index, config) in order from
    /// and back to `home`, with straight-line legs.
    pub fn from_tour(home: &JointConfig, stops: &[(usize, JointConfig)], task_count: usize) -> Self {
        let mut legs = Vec::with_capacity(stops.len() + 1);
        let mut visit_order = vec![Stop::Home];
        let mut prev = (Stop::Home, home.clone());
        for (t, q) in stops {
            legs.push(Leg {
                from: prev.0,
                to: Stop::Task(*t),
                map_index: None,
                base_pose: None,
                trajectory: Trajectory::straight(&prev.1, q),
            });
            visit_order.push(Stop::Task(*t));
            prev = (Stop::Task(*t), q.clone());
        }
        if !stops.is_empty() {
            legs.push(Leg {
                from: prev.0,
                to: Stop::Home,
                map_index: None,
                base_pose: None,
                trajectory: Trajectory::straight(&prev.1, home),
            });
            visit_order.push(Stop::Home);
        }
        let planned: Vec<usize> = stops.iter().map(|s| s.0).collect();
        let total_config_cost = legs.iter().map(|l| l.trajectory.config_length()).sum();
        Self {
            home_config: home.clone(),
            groups: Vec::new(),
            legs,
            visit_order,
            total_config_cost,
            matches: vec![None; task_count],
            unplanned: (0..task_count).filter(|i| !planned.contains(i)).collect(),
        }
    }

    /// Same plan with every leg replaced by the straight segment between
    /// its endpoints.
    pub fn with_straight_seeds(&self) -> Self {
        let mut out = self.clone();
        for leg in &mut out.legs {
            leg.trajectory = Trajectory::straight(leg.trajectory.start(), leg.trajectory.end());
        }
        out.total_config_cost = out.legs.iter().map(|l| l.trajectory.config_length()).sum();
        out
    }

    /// Configurations visited in order, home included at both ends.
    pub fn stop_configs(&self) -> Vec<JointConfig> {
        let mut out = Vec::with_capacity(self.legs.len() + 1);
        if let Some(first) = self.legs.first() {
            out.push(first.trajectory.start().clone());
        }
        out.extend(self.legs.iter().map(|l| l.trajectory.end().clone()));
        out
    }
}

/// Matches `t` to the first map (in discovery order) whose best similarity
/// over its `k` nearest mapped nodes is below the threshold, else to the
/// overall most similar pair.
pub fn match_task(
    t: &TaskPoint,
    decomposition: &Decomposition,
    params: &SequencingParams,
    arm: &ArmModel,
    scene: &Scene,
) -> Result<TaskMatch> {
    let mut best: Option<TaskMatch> = None;
    for (mi, map) in decomposition.maps.iter().enumerate() {
        let arm_m = decomposition.arm_for(map, arm);
        let q_t = ik_solutions(&arm_m, &TaskPoint::new(t.position.x, t.position.y), scene);
        if q_t.is_empty() {
            continue;
        }
        let graph = decomposition.graph_of(map);
        let mut mapped: Vec<usize> = map.assigned_nodes().collect();
        mapped.sort_by(|&a, &b| {
            graph.nodes[a]
                .position
                .distance(t.position)
                .total_cmp(&graph.nodes[b].position.distance(t.position))
                .then(a.cmp(&b))
        });
        mapped.truncate(params.k);
        let mut local: Option<TaskMatch> = None;
        for q in &q_t {
            for &n in &mapped {
                let s = q.l2_distance(map.config(n).unwrap());
                if local.as_ref().is_none_or(|m| s < m.similarity) {
                    local = Some(TaskMatch {
                        task: *t,
                        map_index: mi,
                        matched_node: n,
                        task_config: q.clone(),
                        similarity: s,
                    });
                }
            }
        }
        let Some(local) = local else { continue };
        if local.similarity < params.threshold {
            return Ok(local);
        }
        if best.as_ref().is_none_or(|b| local.similarity < b.similarity) {
            best = Some(local);
        }
    }
    best.ok_or(Error::NoIkSolutions {
        x: t.position.x,
        y: t.position.y,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest d_C path between two mapped nodes over graph edges whose
/// endpoints are both assigned.
pub fn map_path(map: &GhaMap, graph: &TaskGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    map.config(from)?;
    map.config(to)?;
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(HeapItem(0.0, from));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == to {
            break;
        }
        let qu = map.config(u).unwrap();
        for &(v, _) in graph.neighbors(u) {
            let Some(qv) = map.config(v) else { continue };
            let nd = d + config_distance(qu, qv);
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// Seed trajectory from `a.task_config` to `b.task_config` through the
/// mapped configurations of one map.
pub fn intra_subspace_trajectory(
    map: &GhaMap,
    graph: &TaskGraph,
    a: &TaskMatch,
    b: &TaskMatch,
) -> Result<Trajectory> {
    let path = map_path(map, graph, a.matched_node, b.matched_node).ok_or(Error::Disconnected {
        map: a.map_index,
        from: a.matched_node,
        to: b.matched_node,
    })?;
    let mut w = Vec::with_capacity(path.len() + 2);
    w.push(a.task_config.clone());
    w.extend(path.iter().map(|&n| map.config(n).unwrap().clone()));
    w.push(b.task_config.clone());
    Ok(Trajectory::new(w, TrajectorySource::SubspaceSeed))
}

/// IK solution of `home` closest in d_C to the mean configuration of the
/// first map placed on `base_pose`.
pub fn home_config_for(
    decomposition: &Decomposition,
    base_pose: Option<Vec2>,
    home: &TaskPoint,
    arm: &ArmModel,
    scene: &Scene,
) -> Result<JointConfig> {
    let map = decomposition
        .maps
        .iter()
        .find(|m| m.base_pose == base_pose)
        .ok_or_else(|| Error::InvalidInput("decomposition has no map for this base".into()))?;
    let arm_m = decomposition.arm_for(map, arm);
    let mut best: Option<(JointConfig, f64)> = None;
    for q in ik_solutions(&arm_m, &TaskPoint::new(home.position.x, home.position.y), scene) {
        let d = config_distance(&q, &map.mean_config);
        if best.as_ref().is_none_or(|b| d < b.1) {
            best = Some((q, d));
        }
    }
    best.map(|b| b.0).ok_or(Error::NoIkSolutions {
        x: home.position.x,
        y: home.position.y,
    })
}

/// Home configuration of the first map.
pub fn home_config(
    decomposition: &Decomposition,
    home: &TaskPoint,
    arm: &ArmModel,
    scene: &Scene,
) -> Result<JointConfig> {
    let first = decomposition
        .maps
        .first()
        .ok_or_else(|| Error::InvalidInput("decomposition has no maps".into()))?;
    home_config_for(decomposition, first.base_pose, home, arm, scene)
}

/// Full online sequencing: match, group by map, solve one home-anchored
/// tour per group and concatenate the groups in map order.
pub fn sequence(
    tasks: &[TaskPoint],
    decomposition: &Decomposition,
    home: &TaskPoint,
    params: &SequencingParams,
    arm: &ArmModel,
    scene: &Scene,
) -> Result<SequencePlan> {
    let home_q = home_config(decomposition, home, arm, scene)?;
    let matched: Vec<Result<TaskMatch>> = tasks
        .par_iter()
        .map(|t| match_task(t, decomposition, params, arm, scene))
        .collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut unplanned = Vec::new();
    let mut matches = Vec::with_capacity(tasks.len());
    for (i, m) in matched.into_iter().enumerate() {
        match m {
            Ok(m) => {
                groups.entry(m.map_index).or_default().push(i);
                matches.push(Some(m));
            }
            Err(_) => {
                unplanned.push(i);
                matches.push(None);
            }
        }
    }

    let mut plan_groups = Vec::new();
    let mut legs = Vec::new();
    let mut visit_order = vec![Stop::Home];
    for (&mi, members) in &groups {
        let map = &decomposition.maps[mi];
        let graph = decomposition.graph_of(map);
        let group_home = if map.base_pose == decomposition.maps[0].base_pose {
            home_q.clone()
        } else {
            home_config_for(decomposition, map.base_pose, home, arm, scene)?
        };
        let m: Vec<&TaskMatch> = members.iter().map(|&i| matches[i].as_ref().unwrap()).collect();
        let n = m.len() + 1;
        let mut w = vec![vec![0.0; n]; n];
        let mut seeds: BTreeMap<(usize, usize), Trajectory> = BTreeMap::new();
        for i in 0..m.len() {
            let d = config_distance(&group_home, &m[i].task_config);
            w[0][i + 1] = d;
            w[i + 1][0] = d;
            for j in i + 1..m.len() {
                let tr = intra_subspace_trajectory(map, graph, m[i], m[j]).unwrap_or_else(|_| {
                    Trajectory::new(
                        vec![m[i].task_config.clone(), group_home.clone(), m[j].task_config.clone()],
                        TrajectorySource::StraightLine,
                    )
                });
                let c = tr.config_length();
                w[i + 1][j + 1] = c;
                w[j + 1][i + 1] = c;
                seeds.insert((i, j), tr);
            }
        }
        let tour = solve_tsp(&w, 0);
        let order: Vec<usize> = tour[1..].iter().map(|&k| k - 1).collect();

        let mut prev: Option<usize> = None;
        for &k in &order {
            let traj = match prev {
                None => Trajectory::straight(&group_home, &m[k].task_config),
                Some(p) if p < k => seeds[&(p, k)].clone(),
                Some(p) => seeds[&(k, p)].reversed(),
            };
            legs.push(Leg {
                from: prev.map_or(Stop::Home, |p| Stop::Task(members[p])),
                to: Stop::Task(members[k]),
                map_index: Some(mi),
                base_pose: map.base_pose,
                trajectory: traj,
            });
            visit_order.push(Stop::Task(members[k]));
            prev = Some(k);
        }
        if let Some(p) = prev {
            legs.push(Leg {
                from: Stop::Task(members[p]),
                to: Stop::Home,
                map_index: Some(mi),
                base_pose: map.base_pose,
                trajectory: Trajectory::straight(&m[p].task_config, &group_home),
            });
            visit_order.push(Stop::Home);
        }
        plan_groups.push(GroupPlan {
            map_index: mi,
            base_pose: map.base_pose,
            home_config: group_home,
            order: order.iter().map(|&k| members[k]).collect(),
        });
    }
    let total_config_cost = legs.iter().map(|l| l.trajectory.config_length()).sum();
    Ok(SequencePlan {
        home_config: home_q,
        groups: plan_groups,
        legs,
        visit_order,
        total_config_cost,
        matches,
        unplanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, DecompositionParams};
    use crate::geom::Aabb;
    use crate::taskgraph::{build_graph, build_task_grid};

    fn setup() -> (ArmModel, Scene, Decomposition) {
        let arm = ArmModel::planar(&[1.0, 0.8]);
        let scene = Scene::default();
        let grid = build_task_grid(&Aabb::new(Vec2::new(0.6, 0.4), Vec2::new(1.4, 1.0)), 0.1).unwrap();
        let (g, _) = build_graph(&grid, 0.11, &arm, &scene, 5).unwrap();
        let params = DecompositionParams {
            epsilon: 0.35,
            max_subspaces: 3,
            ..Default::default()
        };
        let d = decompose(&g, &params).unwrap();
        (arm, scene, d)
    }

    /// All-pairs shortest paths over assigned nodes, independent of the
    /// heap-based search.
    fn floyd(map: &GhaMap, graph: &TaskGraph) -> Vec<Vec<f64>> {
        let n = graph.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in map.assigned_nodes() {
            d[i][i] = 0.0;
        }
        for e in &graph.edges {
            if let (Some(a), Some(b)) = (map.config(e.a), map.config(e.b)) {
                let c = config_distance(a, b);
                d[e.a][e.b] = c;
                d[e.b][e.a] = c;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn map_paths_are_shortest() {
        let (_, _, d) = setup();
        let map = &d.maps[0];
        let g = d.graph_of(map);
        let all = floyd(map, g);
        let nodes: Vec<usize> = map.assigned_nodes().collect();
        for &a in nodes.iter().step_by(7) {
            for &b in nodes.iter().step_by(5) {
                match map_path(map, g, a, b) {
                    Some(p) => {
                        let len: f64 = p
                            .windows(2)
                            .map(|w| config_distance(map.config(w[0]).unwrap(), map.config(w[1]).unwrap()))
                            .sum();
                        assert!((len - all[a][b]).abs() < 1e-9);
                        assert!(p.windows(2).all(|w| g.edge_weight(w[0], w[1]).is_some()));
                    }
                    None => assert!(all[a][b].is_infinite()),
                }
            }
        }
    }

    #[test]
    fn task_on_node_matches_with_zero_similarity() {
        let (arm, scene, d) = setup();
        let map = &d.maps[0];
        let g = d.graph_of(map);
        let node = map.assigned_nodes().nth(3).unwrap();
        let p = g.nodes[node].position;
        let m = match_task(&TaskPoint::new(p.x, p.y), &d, &SequencingParams::default(), &arm, &scene).unwrap();
        assert_eq!(m.map_index, 0);
        assert!(m.similarity < 1e-9);
        assert_eq!(&m.task_config, map.config(m.matched_node).unwrap());
    }

    #[test]
    fn zero_threshold_falls_back_to_global_best() {
        let (arm, scene, d) = setup();
        let params = SequencingParams { k: 10, threshold: 0.0 };
        let t = TaskPoint::new(1.03, 0.71);
        let m = match_task(&t, &d, &params, &arm, &scene).unwrap();
        // brute force over every map and every mapped node
        let mut best = f64::INFINITY;
        for map in &d.maps {
            let g = d.graph_of(map);
            let near = g
                .nearest(t.position, g.len())
                .into_iter()
                .filter(|&n| map.config(n).is_some())
                .take(10)
                .collect::<Vec<_>>();
            for q in ik_solutions(&arm, &t, &scene) {
                for &n in &near {
                    best = best.min(q.l2_distance(map.config(n).unwrap()));
                }
            }
        }
        assert_eq!(m.similarity, best);
    }

    #[test]
    fn unreachable_task_is_unplanned() {
        let (arm, scene, d) = setup();
        let tasks = [TaskPoint::new(1.0, 0.6), TaskPoint::new(5.0, 5.0), TaskPoint::new(1.2, 0.8)];
        let plan = sequence(&tasks, &d, &TaskPoint::new(1.0, 0.8), &SequencingParams::default(), &arm, &scene).unwrap();
        assert_eq!(plan.unplanned, vec![1]);
        assert!(plan.matches[1].is_none());
    }

    #[test]
    fn plan_structure() {
        let (arm, scene, d) = setup();
        let tasks: Vec<TaskPoint> = (0..9)
            .map(|i| TaskPoint::new(0.65 + 0.08 * i as f64, 0.45 + 0.06 * ((i * 5) % 9) as f64))
            .collect();
        let home = TaskPoint::new(1.0, 0.7);
        let plan = sequence(&tasks, &d, &home, &SequencingParams::default(), &arm, &scene).unwrap();
        assert!(plan.unplanned.is_empty());
        let mut seen: Vec<usize> = plan
            .visit_order
            .iter()
            .filter_map(|s| match s {
                Stop::Task(i) => Some(*i),
                Stop::Home => None,
            })
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..tasks.len()).collect::<Vec<_>>());
        assert_eq!(plan.visit_order.first(), Some(&Stop::Home));
        assert_eq!(plan.visit_order.last(), Some(&Stop::Home));
        assert_eq!(plan.legs[0].trajectory.start(), &plan.home_config);
        for w in plan.legs.windows(2) {
            assert_eq!(w[0].trajectory.end(), w[1].trajectory.start());
            assert_eq!(w[0].to, w[1].from);
        }
        let total: f64 = plan.legs.iter().map(|l| l.trajectory.config_length()).sum();
        assert!((total - plan.total_config_cost).abs() < 1e-12);
        let again = sequence(&tasks, &d, &home, &SequencingParams::default(), &arm, &scene).unwrap();
        assert_eq!(plan, again);
    }

    #[test]
    fn from_tour_chains_home() {
        let h = JointConfig::new([0.0, 0.0]);
        let stops = vec![(1, JointConfig::new([0.5, 0.0])), (0, JointConfig::new([0.5, 0.5]))];
        let p = SequencePlan::from_tour(&h, &stops, 3);
        assert_eq!(p.legs.len(), 3);
        assert_eq!(p.unplanned, vec![2]);
        assert!((p.total_config_cost - 1.5).abs() < 1e-12);
        assert_eq!(p.stop_configs().len(), 4);
    }
}
