//! Trajectory adaptation, sampling-based fallback planning and execution
//! metrics.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kinematics::{config_distance, ArmModel, JointConfig};
use crate::world::{config_valid, motion_valid, Scene, DEFAULT_MOTION_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySource {
    SubspaceSeed,
    StraightLine,
    Adapted,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<JointConfig>,
    pub source: TrajectorySource,
}

impl Trajectory {
    pub fn new(waypoints: Vec<JointConfig>, source: TrajectorySource) -> Self {
        assert!(!waypoints.is_empty(), "trajectory needs at least one waypoint");
        Self { waypoints, source }
    }

    pub fn straight(a: &JointConfig, b: &JointConfig) -> Self {
        Self::new(vec![a.clone(), b.clone()], TrajectorySource::StraightLine)
    }

    pub fn start(&self) -> &JointConfig {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &JointConfig {
        self.waypoints.last().unwrap()
    }

    /// Sum of d_C between consecutive waypoints.
    pub fn config_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| config_distance(&w[0], &w[1]))
            .sum()
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Self::new(w, self.source)
    }

    pub fn is_valid(&self, arm: &ArmModel, scene: &Scene, step: f64) -> bool {
        config_valid(arm, self.start(), scene)
            && self
                .waypoints
                .windows(2)
                .all(|w| motion_valid(arm, &w[0], &w[1], scene, step))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    /// Interpolation step for motion checks (radians).
    pub step: f64,
    /// Resampling period for jerk evaluation (seconds).
    pub dt: f64,
    /// Wall-clock budget of the fallback planner (seconds).
    pub fallback_timeout: f64,
    /// Iteration budget of the fallback planner.
    pub fallback_max_iterations: usize,
    /// Maximum tree extension per iteration (radians, L∞).
    pub extend_step: f64,
    pub shortcut_iterations: usize,
    pub repair_attempts: usize,
    pub repair_radius: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            step: DEFAULT_MOTION_STEP,
            dt: 0.01,
            fallback_timeout: 2.0,
            fallback_max_iterations: 4000,
            extend_step: 0.3,
            shortcut_iterations: 60,
            repair_attempts: 20,
            repair_radius: 0.2,
        }
    }
}

fn perturbed(
    arm: &ArmModel,
    center: &JointConfig,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> JointConfig {
    let mut q = JointConfig(
        center
            .0
            .iter()
            .map(|a| a + rng.gen_range(-radius..=radius))
            .collect(),
    );
    arm.clamp(&mut q);
    q
}

fn path_length(w: &[JointConfig]) -> f64 {
    w.windows(2).map(|p| config_distance(&p[0], &p[1])).sum()
}

/// Random shortcuts, a greedy farthest-visible pass, then removal of
/// collinear waypoints. Endpoints are never touched and every introduced
/// segment is checked with `motion_valid`.
fn smooth(
    mut w: Vec<JointConfig>,
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
    rng: &mut ChaCha8Rng,
) -> Vec<JointConfig> {
    let valid = |a: &JointConfig, b: &JointConfig| motion_valid(arm, a, b, scene, params.step);
    for _ in 0..params.shortcut_iterations {
        if w.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..w.len() - 2);
        let j = rng.gen_range(i + 2..w.len());
        if config_distance(&w[i], &w[j]) <= path_length(&w[i..=j]) && valid(&w[i], &w[j]) {
            w.drain(i + 1..j);
        }
    }

    let mut out = vec![w[0].clone()];
    let mut i = 0;
    while i + 1 < w.len() {
        let mut next = i + 1;
        for j in (i + 2..w.len()).rev() {
            if config_distance(&w[i], &w[j]) <= path_length(&w[i..=j]) && valid(&w[i], &w[j]) {
                next = j;
                break;
            }
        }
        out.push(w[next].clone());
        i = next;
    }

    let mut pruned: Vec<JointConfig> = vec![out[0].clone()];
    for k in 1..out.len() {
        if k + 1 < out.len() {
            let a = pruned.last().unwrap();
            let (b, c) = (&out[k], &out[k + 1]);
            let slack = a.l2_distance(b) + b.l2_distance(c) - a.l2_distance(c);
            if slack <= 1e-9 && valid(a, c) {
                continue;
            }
        }
        pruned.push(out[k].clone());
    }
    pruned
}

/// Repairs then shortens `seed` for `scene`. Fails with `SeedInvalid` when
/// some segment cannot be made collision-free by local perturbation.
pub fn adapt_trajectory(
    seed: &Trajectory,
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
    rng_seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut w = seed.waypoints.clone();
    if !config_valid(arm, &w[0], scene) {
        return Err(Error::SeedInvalid { segment: 0 });
    }
    if !config_valid(arm, w.last().unwrap(), scene) {
        return Err(Error::SeedInvalid {
            segment: w.len().saturating_sub(2),
        });
    }
    if w.len() == 1 {
        return Ok(Trajectory::new(w, TrajectorySource::Adapted));
    }

    // interior waypoints: perturb, or drop if no perturbation is valid
    let mut k = 1;
    while k + 1 < w.len() {
        if config_valid(arm, &w[k], scene) {
            k += 1;
            continue;
        }
        let fixed = (0..params.repair_attempts)
            .map(|_| perturbed(arm, &w[k], params.repair_radius, &mut rng))
            .find(|q| config_valid(arm, q, scene));
        match fixed {
            Some(q) => {
                w[k] = q;
                k += 1;
            }
            None => {
                w.remove(k);
            }
        }
    }

    // segments: insert a perturbed midpoint where the straight motion fails
    let mut i = 0;
    while i + 1 < w.len() {
        if motion_valid(arm, &w[i], &w[i + 1], scene, params.step) {
            i += 1;
            continue;
        }
        let mid = w[i].lerp(&w[i + 1], 0.5);
        let fix = (0..params.repair_attempts)
            .map(|_| perturbed(arm, &mid, params.repair_radius, &mut rng))
            .find(|q| {
                config_valid(arm, q, scene)
                    && motion_valid(arm, &w[i], q, scene, params.step)
                    && motion_valid(arm, q, &w[i + 1], scene, params.step)
            });
        match fix {
            Some(q) => {
                w.insert(i + 1, q);
                i += 2;
            }
            None => return Err(Error::SeedInvalid { segment: i }),
        }
    }

    let w = smooth(w, arm, scene, params, &mut rng);
    Ok(Trajectory::new(w, TrajectorySource::Adapted))
}

struct Tree {
    nodes: Vec<JointConfig>,
    parent: Vec<Option<usize>>,
}

impl Tree {
    fn new(root: JointConfig) -> Self {
        Self {
            nodes: vec![root],
            parent: vec![None],
        }
    }

    fn nearest(&self, q: &JointConfig) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.l2_distance(q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn path_to_root(&self, mut i: usize) -> Vec<JointConfig> {
        let mut out = vec![self.nodes[i].clone()];
        while let Some(p) = self.parent[i] {
            out.push(self.nodes[p].clone());
            i = p;
        }
        out
    }
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

fn extend(
    tree: &mut Tree,
    target: &JointConfig,
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
) -> Extend {
    let near = tree.nearest(target);
    let from = &tree.nodes[near];
    let d = config_distance(from, target);
    let (q, reached) = if d <= params.extend_step {
        (target.clone(), true)
    } else {
        (from.lerp(target, params.extend_step / d), false)
    };
    if !motion_valid(arm, from, &q, scene, params.step) {
        return Extend::Trapped;
    }
    tree.nodes.push(q);
    tree.parent.push(Some(near));
    let id = tree.nodes.len() - 1;
    if reached {
        Extend::Reached(id)
    } else {
        Extend::Advanced(id)
    }
}

/// Bidirectional sampling-tree planner between two valid configurations.
/// Fails with `Timeout` when either the iteration or the wall-clock budget
/// runs out.
pub fn fallback_plan(
    q_start: &JointConfig,
    q_goal: &JointConfig,
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
    rng_seed: u64,
) -> Result<Trajectory> {
    if q_start == q_goal {
        return Ok(Trajectory::new(vec![q_start.clone()], TrajectorySource::Fallback));
    }
    if !config_valid(arm, q_start, scene) || !config_valid(arm, q_goal, scene) {
        return Err(Error::InvalidInput("fallback endpoints must be collision-free".into()));
    }
    if motion_valid(arm, q_start, q_goal, scene, params.step) {
        return Ok(Trajectory::new(
            vec![q_start.clone(), q_goal.clone()],
            TrajectorySource::Fallback,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let deadline = Instant::now() + Duration::from_secs_f64(params.fallback_timeout.max(0.0));
    let mut trees = [Tree::new(q_start.clone()), Tree::new(q_goal.clone())];
    // trees[0] grows from the start while `forward` holds
    let mut forward = true;
    for it in 0..params.fallback_max_iterations {
        if Instant::now() > deadline {
            return Err(Error::Timeout { iterations: it });
        }
        let sample = JointConfig(
            arm.joint_limits
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..=hi))
                .collect(),
        );
        let (a, b) = trees.split_at_mut(1);
        let (grow, other) = if forward { (&mut a[0], &mut b[0]) } else { (&mut b[0], &mut a[0]) };
        let new_id = match extend(grow, &sample, arm, scene, params) {
            Extend::Trapped => {
                forward = !forward;
                continue;
            }
            Extend::Advanced(id) | Extend::Reached(id) => id,
        };
        let target = grow.nodes[new_id].clone();
        let joined = loop {
            match extend(other, &target, arm, scene, params) {
                Extend::Trapped => break None,
                Extend::Advanced(_) => continue,
                Extend::Reached(id) => break Some(id),
            }
        };
        if let Some(other_id) = joined {
            let (start_tree, start_id, goal_tree, goal_id) = if forward {
                (&trees[0], new_id, &trees[1], other_id)
            } else {
                (&trees[0], other_id, &trees[1], new_id)
            };
            let mut path = start_tree.path_to_root(start_id);
            path.reverse();
            let tail = goal_tree.path_to_root(goal_id);
            path.extend(tail.into_iter().skip(1));
            let smoothed = smooth(path, arm, scene, params, &mut rng);
            return Ok(Trajectory::new(smoothed, TrajectorySource::Fallback));
        }
        forward = !forward;
    }
    Err(Error::Timeout {
        iterations: params.fallback_max_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub config_length: f64,
    pub exec_time: f64,
    /// Maximum L2 norm of the joint jerk over interior samples.
    pub max_jerk: f64,
    pub valid: bool,
}

/// Max L2 norm of the five-point central third difference over interior
/// samples; zero when fewer than five samples exist.
pub fn max_jerk_norm(samples: &[Vec<f64>], dt: f64) -> f64 {
    if samples.len() < 5 {
        return 0.0;
    }
    let denom = 2.0 * dt * dt * dt;
    (2..samples.len() - 2)
        .map(|k| {
            (0..samples[k].len())
                .map(|j| {
                    let d = samples[k + 2][j] - 2.0 * samples[k + 1][j] + 2.0 * samples[k - 1][j]
                        - samples[k - 2][j];
                    (d / denom).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Segment durations when every segment runs with its slowest joint at
/// its velocity limit.
pub fn segment_durations(traj: &Trajectory, arm: &ArmModel) -> Vec<f64> {
    traj.waypoints
        .windows(2)
        .map(|w| {
            w[0].0
                .iter()
                .zip(&w[1].0)
                .zip(&arm.max_joint_velocity)
                .map(|((a, b), v)| (b - a).abs() / v)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Uniform resampling of the time-parameterised trajectory at period `dt`.
pub fn resample(traj: &Trajectory, arm: &ArmModel, dt: f64) -> Vec<Vec<f64>> {
    let durations = segment_durations(traj, arm);
    let total: f64 = durations.iter().sum();
    let count = (total / dt + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(count + 1);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..=count {
        let t = k as f64 * dt;
        while seg < durations.len() && t > seg_start + durations[seg] {
            seg_start += durations[seg];
            seg += 1;
        }
        if seg >= durations.len() {
            out.push(traj.end().0.clone());
            continue;
        }
        let s = if durations[seg] > 0.0 {
            ((t - seg_start) / durations[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(traj.waypoints[seg].lerp(&traj.waypoints[seg + 1], s).0);
    }
    out
}

pub fn trajectory_metrics(
    traj: &Trajectory,
    arm: &ArmModel,
    dt: f64,
    scene: &Scene,
    step: f64,
) -> TrajectoryMetrics {
    assert!(dt > 0.0, "dt must be positive");
    let exec_time = segment_durations(traj, arm).iter().sum();
    TrajectoryMetrics {
        config_length: traj.config_length(),
        exec_time,
        max_jerk: max_jerk_norm(&resample(traj, arm, dt), dt),
        valid: traj.is_valid(arm, scene, step),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegStatus {
    Adapted,
    Fallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegOutcome {
    pub status: LegStatus,
    pub trajectory: Option<Trajectory>,
    pub metrics: Option<TrajectoryMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Adapt the seed; on failure plan between its endpoints with the fallback
/// planner.
pub fn execute_leg(
    seed: &Trajectory,
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
    rng_seed: u64,
) -> LegOutcome {
    let planned = adapt_trajectory(seed, arm, scene, params, rng_seed)
        .map(|t| (LegStatus::Adapted, t))
        .or_else(|_| {
            fallback_plan(seed.start(), seed.end(), arm, scene, params, rng_seed ^ 0x9e37_79b9)
                .map(|t| (LegStatus::Fallback, t))
        });
    match planned {
        Ok((status, t)) => LegOutcome {
            status,
            metrics: Some(trajectory_metrics(&t, arm, params.dt, scene, params.step)),
            trajectory: Some(t),
            error: None,
        },
        Err(e) => LegOutcome {
            status: LegStatus::Failed,
            trajectory: None,
            metrics: None,
            error: Some(e.to_string()),
        },
    }
}

/// SplitMix64 mixing of a base seed with a stream index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs every leg independently; leg `i` uses `derive_seed(seed, i)`.
pub fn execute_legs(
    seeds: &[(Trajectory, Option<Vec2>)],
    arm: &ArmModel,
    scene: &Scene,
    params: &MotionParams,
    seed: u64,
) -> Vec<LegOutcome> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, (traj, base))| {
            let arm = match base {
                Some(b) => arm.clone().with_base(*b),
                None => arm.clone(),
            };
            execute_leg(traj, &arm, scene, params, derive_seed(seed, i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Shape;
    use std::f64::consts::PI;

    fn arm2() -> ArmModel {
        ArmModel::planar(&[1.0, 1.0])
    }

    fn q(a: f64, b: f64) -> JointConfig {
        JointConfig::new([a, b])
    }

    #[test]
    fn straight_seed_unchanged() {
        let seed = Trajectory::new(vec![q(0.0, 0.0), q(0.5, 0.5), q(1.0, 1.0)], TrajectorySource::StraightLine);
        let out = adapt_trajectory(&seed, &arm2(), &Scene::default(), &MotionParams::default(), 1).unwrap();
        assert_eq!(out.waypoints, vec![q(0.0, 0.0), q(1.0, 1.0)]);
        assert!((out.config_length() - seed.config_length()).abs() < 1e-12);
    }

    #[test]
    fn detour_collapses_to_segment() {
        let seed = Trajectory::new(
            vec![q(0.0, 0.0), q(1.0, -0.8), q(1.5, 1.2), q(0.3, 2.0), q(1.0, 1.0)],
            TrajectorySource::SubspaceSeed,
        );
        let out = adapt_trajectory(&seed, &arm2(), &Scene::default(), &MotionParams::default(), 5).unwrap();
        assert_eq!(out.start(), seed.start());
        assert_eq!(out.end(), seed.end());
        assert!((out.config_length() - config_distance(seed.start(), seed.end())).abs() < 1e-6);
    }

    fn wall_scene() -> Scene {
        // a wall the tip must pass while sweeping q1 from -0.6 to 0.6
        Scene::new([Shape::rect((1.3, -0.5), (2.5, 0.5))])
    }

    #[test]
    fn blocked_seed_is_invalid() {
        let arm = arm2();
        let scene = wall_scene();
        let a = q(-0.9, 0.0);
        let b = q(0.9, 0.0);
        assert!(config_valid(&arm, &a, &scene) && config_valid(&arm, &b, &scene));
        let seed = Trajectory::straight(&a, &b);
        assert!(matches!(
            adapt_trajectory(&seed, &arm, &scene, &MotionParams::default(), 3),
            Err(Error::SeedInvalid { segment: 0 })
        ));
    }

    #[test]
    fn fallback_routes_around_wall() {
        let arm = arm2();
        let scene = wall_scene();
        let (a, b) = (q(-0.9, 0.0), q(0.9, 0.0));
        let params = MotionParams::default();
        let t = fallback_plan(&a, &b, &arm, &scene, &params, 9).unwrap();
        assert_eq!(t.start(), &a);
        assert_eq!(t.end(), &b);
        assert!(t.is_valid(&arm, &scene, params.step));
        assert_eq!(t, fallback_plan(&a, &b, &arm, &scene, &params, 9).unwrap());
    }

    #[test]
    fn fallback_trivial_cases() {
        let arm = arm2();
        let p = MotionParams::default();
        let t = fallback_plan(&q(0.2, 0.2), &q(0.2, 0.2), &arm, &Scene::default(), &p, 0).unwrap();
        assert_eq!(t.waypoints.len(), 1);
        // empty scene: bounded detour over many seeds
        for s in 0..100 {
            let (a, b) = (q(-1.0, 0.5), q(1.2, -0.7));
            let t = fallback_plan(&a, &b, &arm, &Scene::default(), &p, s).unwrap();
            assert!(t.config_length() <= 1.5 * config_distance(&a, &b));
        }
    }

    #[test]
    fn disconnected_goal_times_out() {
        // posts on the ±y axes stop link 1 from sweeping past ±π/2
        let arm = arm2();
        let scene = Scene::new([
            Shape::rect((-0.05, 0.3), (0.05, 0.6)),
            Shape::rect((-0.05, -0.6), (0.05, -0.3)),
        ]);
        let (start, goal) = (q(0.0, 0.0), q(PI, 0.0));
        assert!(config_valid(&arm, &start, &scene) && config_valid(&arm, &goal, &scene));
        let p = MotionParams {
            fallback_max_iterations: 300,
            ..Default::default()
        };
        assert_eq!(
            fallback_plan(&start, &goal, &arm, &scene, &p, 4),
            Err(Error::Timeout { iterations: 300 })
        );
    }

    #[test]
    fn wall_clock_budget_enforced() {
        let arm = arm2();
        let scene = wall_scene();
        let p = MotionParams {
            fallback_timeout: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            fallback_plan(&q(-0.9, 0.0), &q(0.9, 0.0), &arm, &scene, &p, 1),
            Err(Error::Timeout { iterations: 0 })
        ));
    }

    #[test]
    fn constant_trajectory_metrics() {
        let t = Trajectory::new(vec![q(0.3, 0.3), q(0.3, 0.3)], TrajectorySource::Adapted);
        let m = trajectory_metrics(&t, &arm2(), 0.01, &Scene::default(), 0.05);
        assert_eq!(m.config_length, 0.0);
        assert_eq!(m.exec_time, 0.0);
        assert_eq!(m.max_jerk, 0.0);
        assert!(m.valid);
    }

    #[test]
    fn straight_segment_has_no_interior_jerk() {
        let t = Trajectory::straight(&q(0.0, 0.0), &q(1.0, -0.5));
        let m = trajectory_metrics(&t, &arm2(), 1e-3, &Scene::default(), 0.05);
        assert!((m.exec_time - 1.0).abs() < 1e-12);
        assert!(m.max_jerk < 1e-3, "{}", m.max_jerk);
    }

    #[test]
    fn quintic_jerk_matches_analytic() {
        // q(τ) = τ⁵ has third derivative 60τ², maximal (60) at τ → 1
        let dt = 1e-3;
        let jerk = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let samples: Vec<Vec<f64>> = (0..=n).map(|k| vec![(k as f64 * dt).powi(5)]).collect();
            max_jerk_norm(&samples, dt)
        };
        let j = jerk(dt);
        assert!(((j - 60.0) / 60.0).abs() < 0.005, "{j}");
        let half = jerk(dt / 2.0);
        assert!(((half - j) / j).abs() < 0.01);
    }

    #[test]
    fn limits_are_respected_by_perturbation() {
        let arm = arm2();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let p = perturbed(&arm, &q(PI, -PI), 0.2, &mut rng);
            assert!(arm.within_limits(&p));
        }
    }

    #[test]
    fn execute_leg_falls_back() {
        let arm = arm2();
        let scene = wall_scene();
        let out = execute_leg(&Trajectory::straight(&q(-0.9, 0.0), &q(0.9, 0.0)), &arm, &scene, &MotionParams::default(), 2);
        assert_eq!(out.status, LegStatus::Fallback);
        assert!(out.metrics.unwrap().valid);
    }
}
