//! Offline ε-GHA subspace decomposition of a task graph.
//!
//! Each iteration samples root nodes from the still-unmapped part of the
//! graph, grows a Dijkstra-style map from every root IK candidate, and keeps
//! the candidate with the lowest summed path cost `J`. A node's IK
//! assignment is fixed the first time it is set within a map; later
//! expansions may only lower its path cost or change its parent edge.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec2};
use crate::kinematics::{ArmModel, ConfigMetric, JointConfig};
use crate::taskgraph::{build_graph, build_task_grid, TaskGraph};
use crate::world::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyTarget {
    /// Charge `rho * omega(u)` on the node being relaxed only.
    #[default]
    Target,
    /// Charge both endpoints of the relaxed edge.
    BothEndpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionParams {
    pub epsilon: f64,
    pub c_max: f64,
    pub rho: f64,
    pub rho_s: f64,
    pub zeta: Option<f64>,
    pub max_subspaces: usize,
    pub root_sample_count: usize,
    pub rng_seed: u64,
    pub penalty_target: PenaltyTarget,
    pub metric: ConfigMetric,
}

impl Default for DecompositionParams {
    fn default() -> Self {
        Self {
            epsilon: 0.35,
            c_max: 5.0,
            rho: 2.0,
            rho_s: 0.02,
            zeta: None,
            max_subspaces: 5,
            root_sample_count: 10,
            rng_seed: 0,
            penalty_target: PenaltyTarget::Target,
            metric: ConfigMetric::LInf,
        }
    }
}

impl DecompositionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("decomposition: {m}")));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.c_max > 0.0) {
            return bad("c_max must be positive");
        }
        if !(self.rho >= 0.0) || !(self.rho_s >= 0.0) {
            return bad("penalty weights must be nonnegative");
        }
        if matches!(self.zeta, Some(z) if !(z > 0.0)) {
            return bad("zeta must be positive when set");
        }
        if self.max_subspaces == 0 {
            return bad("max_subspaces must be at least 1");
        }
        if self.root_sample_count == 0 {
            return bad("root_sample_count must be at least 1");
        }
        Ok(())
    }
}

/// Per-node count of how many maps have assigned the node, indexed by the
/// node's source (grid) index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VisitCounts {
    pub omega: Vec<u32>,
}

impl VisitCounts {
    pub fn new(len: usize) -> Self {
        Self {
            omega: vec![0; len],
        }
    }

    pub fn get(&self, id: usize) -> u32 {
        self.omega.get(id).copied().unwrap_or(0)
    }

    fn bump(&mut self, id: usize) {
        if id >= self.omega.len() {
            self.omega.resize(id + 1, 0);
        }
        self.omega[id] += 1;
    }
}

/// One ε-GHA map θⁱ over the nodes of its task graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhaMap {
    /// Indexed by graph node; `None` is UNDEFINED.
    pub assignment: Vec<Option<JointConfig>>,
    /// `(child, parent)` pairs sorted by child.
    pub tree_edges: Vec<(usize, usize)>,
    pub root: usize,
    pub root_config: JointConfig,
    pub mean_config: JointConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_pose: Option<Vec2>,
    #[serde(default)]
    pub graph_index: usize,
    pub objective: f64,
}

impl GhaMap {
    pub fn config(&self, node: usize) -> Option<&JointConfig> {
        self.assignment.get(node).and_then(Option::as_ref)
    }

    pub fn assigned_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.as_ref().map(|_| i))
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|q| q.is_some()).count()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.assignment.len()];
        for &(c, par) in &self.tree_edges {
            p[c] = Some(par);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every node is mapped.
    Covered,
    MaxSubspaces,
    /// An iteration mapped no previously unmapped node.
    NoProgress,
    /// Every sampled root was rejected by the ζ threshold.
    NoFeasibleRoot,
    /// Mobile mode: every base pose already carries a map.
    BasesExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// One graph for a static base, one per base pose in mobile mode.
    pub graphs: Vec<TaskGraph>,
    #[serde(default)]
    pub base_poses: Vec<Vec2>,
    pub maps: Vec<GhaMap>,
    pub params: DecompositionParams,
    pub coverage: f64,
    pub termination: Termination,
    pub visit_counts: VisitCounts,
}

impl Decomposition {
    pub fn graph_of(&self, map: &GhaMap) -> &TaskGraph {
        &self.graphs[map.graph_index]
    }

    /// The arm placed at the map's base pose.
    pub fn arm_for(&self, map: &GhaMap, arm: &ArmModel) -> ArmModel {
        match map.base_pose {
            Some(b) => arm.clone().with_base(b),
            None => arm.clone(),
        }
    }

    pub fn is_partial(&self) -> bool {
        self.coverage < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    cost: f64,
    node: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    // min-heap on cost, ties to the smaller node index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Mutable state of one map search from a fixed root configuration.
#[derive(Debug, Clone)]
pub struct SearchState {
    /// Path cost from the root.
    pub g: Vec<f64>,
    /// Index into the node's IK set.
    pub theta: Vec<Option<usize>>,
    pub parent: Vec<Option<usize>>,
    closed: Vec<bool>,
    queue: BinaryHeap<QueueEntry>,
}

impl SearchState {
    pub fn new(node_count: usize, root: usize, root_ik: usize, c_max: f64) -> Self {
        let mut s = Self {
            g: vec![c_max; node_count],
            theta: vec![None; node_count],
            parent: vec![None; node_count],
            closed: vec![false; node_count],
            queue: BinaryHeap::new(),
        };
        s.g[root] = 0.0;
        s.theta[root] = Some(root_ik);
        s.queue.push(QueueEntry { cost: 0.0, node: root });
        s
    }

    fn pop(&mut self) -> Option<usize> {
        while let Some(e) = self.queue.pop() {
            if !self.closed[e.node] && e.cost <= self.g[e.node] {
                self.closed[e.node] = true;
                return Some(e.node);
            }
        }
        None
    }

    /// Relaxes `u` through `t` with already-penalised edge cost
    /// `effective_cost`. On improvement, assigns θ(u) if still UNDEFINED,
    /// records `t` as the parent and (re)queues `u`. Returns whether the
    /// state changed.
    pub fn update(&mut self, u: usize, t: usize, q_u: usize, effective_cost: f64) -> bool {
        let candidate = effective_cost + self.g[t];
        if candidate < self.g[u] {
            if self.theta[u].is_none() {
                self.theta[u] = Some(q_u);
            }
            self.parent[u] = Some(t);
            self.g[u] = candidate;
            self.queue.push(QueueEntry {
                cost: candidate,
                node: u,
            });
            true
        } else {
            false
        }
    }
}

/// `l + rho * omega(u) [+ rho * omega(t)] + rho_s * d(q_u, q_avg0)`.
pub fn effective_cost(
    l: f64,
    params: &DecompositionParams,
    omega_u: u32,
    omega_t: u32,
    q_u: &JointConfig,
    q_avg0: Option<&JointConfig>,
) -> f64 {
    let mut cost = l + params.rho * omega_u as f64;
    if params.penalty_target == PenaltyTarget::BothEndpoints {
        cost += params.rho * omega_t as f64;
    }
    if let Some(avg) = q_avg0 {
        cost += params.rho_s * params.metric.distance(q_u, avg);
    }
    cost
}

/// Among `Q(u)`, the candidate closest to `q_t` with
/// `d_C(q_t, p) < ε + d_T(u, t)`. Returns its IK index and the edge cost.
pub fn get_mapping_index(
    u: usize,
    q_t: &JointConfig,
    task_dist: f64,
    graph: &TaskGraph,
    params: &DecompositionParams,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in graph.ik_sets[u].iter().enumerate() {
        let d = params.metric.distance(q_t, p);
        if d < params.epsilon + task_dist && best.is_none_or(|(_, l)| d < l) {
            best = Some((i, d));
        }
    }
    best
}

/// Candidate mapping for neighbour `u` of the expanded node `t`.
pub fn get_mapping(
    u: usize,
    q_t: &JointConfig,
    t: usize,
    graph: &TaskGraph,
    params: &DecompositionParams,
) -> Option<(JointConfig, f64)> {
    let d = graph.edge_weight(u, t)?;
    get_mapping_index(u, q_t, d, graph, params).map(|(i, l)| (graph.ik_sets[u][i].clone(), l))
}

fn mean_config(configs: impl Iterator<Item = JointConfig>) -> Option<JointConfig> {
    let mut sum: Option<Vec<f64>> = None;
    let mut n = 0usize;
    for q in configs {
        n += 1;
        match sum.as_mut() {
            None => sum = Some(q.0),
            Some(s) => s.iter_mut().zip(&q.0).for_each(|(a, b)| *a += b),
        }
    }
    sum.map(|s| JointConfig(s.into_iter().map(|v| v / n as f64).collect()))
}

fn search_from(
    graph: &TaskGraph,
    root: usize,
    root_ik: usize,
    params: &DecompositionParams,
    omega: &VisitCounts,
    q_avg0: Option<&JointConfig>,
) -> SearchState {
    let mut state = SearchState::new(graph.len(), root, root_ik, params.c_max);
    while let Some(t) = state.pop() {
        let q_t = &graph.ik_sets[t][state.theta[t].expect("queued nodes are assigned")];
        for &(u, d_t) in graph.neighbors(t) {
            if state.closed[u] {
                continue;
            }
            let (q_u, l) = match state.theta[u] {
                None => match get_mapping_index(u, q_t, d_t, graph, params) {
                    Some(m) => m,
                    None => continue,
                },
                Some(i) => {
                    let l = params.metric.distance(q_t, &graph.ik_sets[u][i]);
                    // tree edges must satisfy the same distortion filter
                    if !(l < params.epsilon + d_t) {
                        continue;
                    }
                    (i, l)
                }
            };
            let cost = effective_cost(
                l,
                params,
                omega.get(graph.source_index[u]),
                omega.get(graph.source_index[t]),
                &graph.ik_sets[u][q_u],
                q_avg0,
            );
            state.update(u, t, q_u, cost);
        }
    }
    state
}

/// Builds the best map rooted at `root` over all its IK candidates.
pub fn generate_map(
    graph: &TaskGraph,
    root: usize,
    params: &DecompositionParams,
    omega: &VisitCounts,
    q_avg0: Option<&JointConfig>,
) -> Result<(f64, GhaMap)> {
    if root >= graph.len() || graph.ik_sets[root].is_empty() {
        return Err(Error::InvalidInput(format!("root {root} has no IK candidates")));
    }
    let mut best: Option<(f64, SearchState, usize)> = None;
    for (ci, q0) in graph.ik_sets[root].iter().enumerate() {
        if let (Some(avg), Some(z)) = (q_avg0, params.zeta) {
            if params.metric.distance(q0, avg) >= z {
                continue;
            }
        }
        let state = search_from(graph, root, ci, params, omega, q_avg0);
        let j: f64 = state
            .g
            .iter()
            .enumerate()
            .filter(|(n, _)| *n != root)
            .map(|(_, g)| g)
            .sum();
        if best.as_ref().is_none_or(|(bj, _, _)| j < *bj) {
            best = Some((j, state, ci));
        }
    }
    let (j, state, ci) = best.ok_or(Error::NoFeasibleRoot { node: root })?;
    let assignment: Vec<Option<JointConfig>> = state
        .theta
        .iter()
        .enumerate()
        .map(|(n, t)| t.map(|i| graph.ik_sets[n][i].clone()))
        .collect();
    let tree_edges = state
        .parent
        .iter()
        .enumerate()
        .filter_map(|(c, p)| p.map(|p| (c, p)))
        .collect();
    let mean = mean_config(assignment.iter().flatten().cloned()).expect("root is assigned");
    Ok((
        j,
        GhaMap {
            assignment,
            tree_edges,
            root,
            root_config: graph.ik_sets[root][ci].clone(),
            mean_config: mean,
            base_pose: None,
            graph_index: 0,
            objective: j,
        },
    ))
}

fn run_decomposition(
    graphs: Vec<TaskGraph>,
    base_poses: Vec<Vec2>,
    params: &DecompositionParams,
    consume_graphs: bool,
) -> Result<Decomposition> {
    params.validate()?;
    if graphs.iter().all(TaskGraph::is_empty) {
        return Err(Error::EmptyGraph);
    }
    for g in &graphs {
        if g.connection_radius > params.epsilon {
            return Err(Error::InvalidInput(format!(
                "connection radius {} exceeds epsilon {}; the distortion bound would not hold on edges",
                g.connection_radius, params.epsilon
            )));
        }
    }
    let universe: BTreeSet<usize> = graphs
        .iter()
        .flat_map(|g| g.source_index.iter().copied())
        .collect();
    let mut open = universe.clone();
    let mut omega = VisitCounts::new(universe.last().map_or(0, |m| m + 1));
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut available: Vec<usize> = (0..graphs.len()).collect();
    let mut maps: Vec<GhaMap> = Vec::new();

    let termination = loop {
        if open.is_empty() {
            break Termination::Covered;
        }
        if maps.len() >= params.max_subspaces {
            break Termination::MaxSubspaces;
        }
        if available.is_empty() {
            break Termination::BasesExhausted;
        }
        let q_avg0 = maps.first().map(|m| m.mean_config.clone());
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for &gi in &available {
            let g = &graphs[gi];
            let open_nodes: Vec<usize> = (0..g.len())
                .filter(|&n| open.contains(&g.source_index[n]))
                .collect();
            if open_nodes.is_empty() {
                continue;
            }
            let amount = params.root_sample_count.min(open_nodes.len());
            for i in sample(&mut rng, open_nodes.len(), amount) {
                candidates.push((gi, open_nodes[i]));
            }
        }
        if candidates.is_empty() {
            break Termination::NoProgress;
        }
        let results: Vec<Result<(f64, GhaMap)>> = candidates
            .par_iter()
            .map(|&(gi, root)| generate_map(&graphs[gi], root, params, &omega, q_avg0.as_ref()))
            .collect();
        let mut best: Option<(f64, GhaMap, usize)> = None;
        for (r, &(gi, _)) in results.into_iter().zip(&candidates) {
            match r {
                Ok((j, m)) => {
                    if best.as_ref().is_none_or(|(bj, _, _)| j < *bj) {
                        best = Some((j, m, gi));
                    }
                }
                Err(Error::NoFeasibleRoot { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let Some((_, mut map, gi)) = best else {
            break Termination::NoFeasibleRoot;
        };
        let g = &graphs[gi];
        let assigned: Vec<usize> = map.assigned_nodes().map(|n| g.source_index[n]).collect();
        if !assigned.iter().any(|id| open.contains(id)) {
            break Termination::NoProgress;
        }
        for id in &assigned {
            open.remove(id);
            omega.bump(*id);
        }
        map.graph_index = gi;
        map.base_pose = base_poses.get(gi).copied();
        maps.push(map);
        if consume_graphs {
            available.retain(|&a| a != gi);
        }
    };

    let coverage = if universe.is_empty() {
        0.0
    } else {
        (universe.len() - open.len()) as f64 / universe.len() as f64
    };
    Ok(Decomposition {
        graphs,
        base_poses,
        maps,
        params: params.clone(),
        coverage,
        termination,
        visit_counts: omega,
    })
}

/// Static-base decomposition of `graph` into up to `max_subspaces` maps.
pub fn decompose(graph: &TaskGraph, params: &DecompositionParams) -> Result<Decomposition> {
    run_decomposition(vec![graph.clone()], Vec::new(), params, false)
}

/// Mobile-base decomposition: one graph per base pose, each iteration keeps
/// the globally best map and retires its base pose.
#[allow(clippy::too_many_arguments)]
pub fn decompose_mobile(
    grid_region: &Aabb,
    spacing: f64,
    radius: f64,
    edge_check_count: usize,
    base_poses: &[Vec2],
    arm: &ArmModel,
    scene: &Scene,
    params: &DecompositionParams,
) -> Result<Decomposition> {
    if base_poses.is_empty() {
        return Err(Error::InvalidInput("at least one base pose is required".into()));
    }
    let grid = build_task_grid(grid_region, spacing)?;
    let mut graphs = Vec::with_capacity(base_poses.len());
    for (b, pose) in base_poses.iter().enumerate() {
        let pts: Vec<_> = grid.iter().map(|p| p.on_base(b)).collect();
        let (g, _) = build_graph(&pts, radius, &arm.clone().with_base(*pose), scene, edge_check_count)?;
        graphs.push(g);
    }
    run_decomposition(graphs, base_poses.to_vec(), params, true)
}

// ---------------------------------------------------------------------------
// verification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub pair_samples: usize,
    pub geodesic_samples: usize,
    pub seed: u64,
    pub metric: ConfigMetric,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            pair_samples: 1000,
            geodesic_samples: 200,
            seed: 0,
            metric: ConfigMetric::LInf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeViolation {
    pub child: usize,
    pub parent: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathViolation {
    pub from: usize,
    pub to: usize,
    pub segments: usize,
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GhaReport {
    /// Nodes whose assignment is not one of their IK candidates, or an
    /// unassigned root / tree-edge endpoint.
    pub assignment_violations: Vec<usize>,
    pub edge_violations: Vec<EdgeViolation>,
    pub hop_bound_violations: Vec<PathViolation>,
    pub geodesic_bound_violations: Vec<PathViolation>,
    pub edges_checked: usize,
    pub pairs_checked: usize,
    pub geodesics_checked: usize,
    pub max_edge_gap: f64,
}

impl GhaReport {
    pub fn is_clean(&self) -> bool {
        self.assignment_violations.is_empty()
            && self.edge_violations.is_empty()
            && self.hop_bound_violations.is_empty()
            && self.geodesic_bound_violations.is_empty()
    }
}

fn tree_path(parents: &[Option<usize>], a: usize, b: usize) -> Option<Vec<usize>> {
    let chain = |mut n: usize| {
        let mut c = vec![n];
        let mut guard = 0;
        while let Some(p) = parents[n] {
            n = p;
            c.push(n);
            guard += 1;
            if guard > parents.len() {
                return None;
            }
        }
        Some(c)
    };
    let ca = chain(a)?;
    let cb = chain(b)?;
    if ca.last() != cb.last() {
        return None;
    }
    let (mut i, mut j) = (ca.len(), cb.len());
    while i > 0 && j > 0 && ca[i - 1] == cb[j - 1] {
        i -= 1;
        j -= 1;
    }
    let mut path: Vec<usize> = ca[..=i].to_vec();
    path.extend(cb[..j].iter().rev());
    Some(path)
}

fn shortest_paths(adj: &[Vec<(usize, f64)>], s: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(QueueEntry { cost: 0.0, node: s });
    while let Some(QueueEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(m, w) in &adj[node] {
            let c = cost + w;
            if c < dist[m] {
                dist[m] = c;
                prev[m] = Some(node);
                heap.push(QueueEntry { cost: c, node: m });
            }
        }
    }
    (dist, prev)
}

/// Checks the edge condition, the N-hop bound along tree paths and the
/// (N+1)ε bound along sampled graph geodesics.
pub fn verify_gha(map: &GhaMap, graph: &TaskGraph, epsilon: f64, opts: &VerifyOptions) -> GhaReport {
    let d_c = |a: &JointConfig, b: &JointConfig| opts.metric.distance(a, b);
    let mut report = GhaReport::default();
    let n = graph.len().min(map.assignment.len());
    if map.assignment.len() != graph.len() {
        report.assignment_violations.push(map.assignment.len());
    }
    for node in 0..n {
        if let Some(q) = map.config(node) {
            if !graph.ik_sets[node].iter().any(|p| d_c(p, q) <= 1e-9) {
                report.assignment_violations.push(node);
            }
        }
    }
    if map.config(map.root).is_none() {
        report.assignment_violations.push(map.root);
    }

    for &(c, p) in &map.tree_edges {
        report.edges_checked += 1;
        let (Some(qc), Some(qp), Some(w)) = (
            map.config(c),
            map.config(p),
            (c < n && p < n).then(|| graph.edge_weight(c, p)).flatten(),
        ) else {
            report.assignment_violations.push(c);
            continue;
        };
        let gap = (d_c(qc, qp) - w).abs();
        report.max_edge_gap = report.max_edge_gap.max(gap);
        if !(gap < epsilon) {
            report.edge_violations.push(EdgeViolation { child: c, parent: p, gap });
        }
    }

    let assigned: Vec<usize> = map.assigned_nodes().filter(|&a| a < n).collect();
    if assigned.len() < 2 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pick_pair = |rng: &mut ChaCha8Rng| {
        let i = rng.gen_range(0..assigned.len());
        let mut j = rng.gen_range(0..assigned.len() - 1);
        if j >= i {
            j += 1;
        }
        (assigned[i], assigned[j])
    };

    let parents = map.parents();
    for _ in 0..opts.pair_samples {
        let (a, b) = pick_pair(&mut rng);
        let Some(path) = tree_path(&parents, a, b) else {
            continue;
        };
        let hops = path.len() - 1;
        let task_len: f64 = path
            .windows(2)
            .map(|w| graph.edge_weight(w[0], w[1]).unwrap_or(f64::INFINITY))
            .sum();
        let dev = (d_c(map.config(a).unwrap(), map.config(b).unwrap()) - task_len).abs();
        let bound = hops as f64 * epsilon;
        report.pairs_checked += 1;
        if !(dev < bound) {
            report.hop_bound_violations.push(PathViolation {
                from: a,
                to: b,
                segments: hops,
                deviation: dev,
                bound,
            });
        }
    }

    // task-space geodesics restricted to ε-consistent edges between mapped nodes
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        if let (Some(qa), Some(qb)) = (map.config(e.a), map.config(e.b)) {
            if (d_c(qa, qb) - e.weight).abs() < epsilon {
                adj[e.a].push((e.b, e.weight));
                adj[e.b].push((e.a, e.weight));
            }
        }
    }
    for _ in 0..opts.geodesic_samples {
        let (s, t) = pick_pair(&mut rng);
        let (dist, prev) = shortest_paths(&adj, s);
        if !dist[t].is_finite() {
            continue;
        }
        let mut path = vec![t];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        let segs = path.len() - 1;
        let image_len: f64 = path
            .windows(2)
            .map(|w| d_c(map.config(w[0]).unwrap(), map.config(w[1]).unwrap()))
            .sum();
        let dev = (d_c(map.config(s).unwrap(), map.config(t).unwrap()) - image_len).abs();
        let bound = (segs + 1) as f64 * epsilon;
        report.geodesics_checked += 1;
        if dev > bound {
            report.geodesic_bound_violations.push(PathViolation {
                from: s,
                to: t,
                segments: segs,
                deviation: dev,
                bound,
            });
        }
    }
    report
}
