//! Comparison sequencers and an exhaustive optimum for small instances.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{config_distance, ik_solutions, ArmModel, JointConfig, TaskPoint};
use crate::motion::{derive_seed, execute_leg, MotionParams, Trajectory};
use crate::sequencer::{solve_tsp, SequencePlan};
use crate::world::Scene;

/// Exhaustive search limits.
pub const GTSP_MAX_TASKS: usize = 6;
pub const GTSP_MAX_IK: usize = 4;

/// Home task and the configuration every method starts and ends in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Home {
    pub task: TaskPoint,
    pub config: JointConfig,
}

fn lex(a: &JointConfig, b: &JointConfig) -> std::cmp::Ordering {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn bits(q: &JointConfig) -> Vec<u64> {
    q.0.iter().map(|a| a.to_bits()).collect()
}

/// Bit patterns of the two endpoint configurations, in canonical order.
type EndpointKey = (Vec<u64>, Vec<u64>);

/// Configuration-space cost of moving between two configurations in a
/// scene: the length of the adapted straight seed (or the fallback path),
/// or the detour through home when that is cheaper. Infinite when neither
/// can be planned. Symmetric and deterministic for a fixed seed.
pub struct CostOracle {
    arm: ArmModel,
    scene: Scene,
    params: MotionParams,
    home: JointConfig,
    seed: u64,
    cache: Mutex<HashMap<EndpointKey, f64>>,
}

impl CostOracle {
    pub fn new(arm: ArmModel, scene: Scene, params: MotionParams, home: JointConfig, seed: u64) -> Self {
        Self {
            arm,
            scene,
            params,
            home,
            seed,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn home(&self) -> &JointConfig {
        &self.home
    }

    pub fn direct_cost(&self, a: &JointConfig, b: &JointConfig) -> f64 {
        if a == b {
            return 0.0;
        }
        let (a, b) = if lex(a, b).is_gt() { (b, a) } else { (a, b) };
        let key = (bits(a), bits(b));
        if let Some(&c) = self.cache.lock().unwrap().get(&key) {
            return c;
        }
        let seed = key.0.iter().chain(&key.1).fold(self.seed, |s, &x| derive_seed(s, x));
        let out = execute_leg(&Trajectory::straight(a, b), &self.arm, &self.scene, &self.params, seed);
        let c = out.trajectory.map_or(f64::INFINITY, |t| t.config_length());
        self.cache.lock().unwrap().insert(key, c);
        c
    }

    pub fn leg_cost(&self, a: &JointConfig, b: &JointConfig) -> f64 {
        let direct = self.direct_cost(a, b);
        let via = self.direct_cost(a, &self.home) + self.direct_cost(&self.home, b);
        direct.min(via)
    }

    /// Sum of leg costs between consecutive stops of `plan`.
    pub fn plan_cost(&self, plan: &SequencePlan) -> f64 {
        plan.stop_configs()
            .windows(2)
            .map(|w| self.leg_cost(&w[0], &w[1]))
            .sum()
    }
}

fn task_space_order(tasks: &[(usize, TaskPoint)], home: &TaskPoint) -> Vec<usize> {
    let pts: Vec<_> = std::iter::once(home.position)
        .chain(tasks.iter().map(|t| t.1.position))
        .collect();
    let w: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| pts.iter().map(|b| a.distance(*b)).collect())
        .collect();
    solve_tsp(&w, 0)[1..].iter().map(|&k| k - 1).collect()
}

fn reachable(tasks: &[TaskPoint], arm: &ArmModel, scene: &Scene) -> Vec<(usize, TaskPoint, Vec<JointConfig>)> {
    tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| (i, *t, ik_solutions(arm, t, scene)))
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|(_, _, q)| !q.is_empty())
        .collect()
}

/// Task-space tour, first IK solution per task.
pub fn naive_sequence(tasks: &[TaskPoint], arm: &ArmModel, scene: &Scene, home: &Home) -> SequencePlan {
    let r = reachable(tasks, arm, scene);
    let pts: Vec<(usize, TaskPoint)> = r.iter().map(|(i, t, _)| (*i, *t)).collect();
    let stops: Vec<(usize, JointConfig)> = task_space_order(&pts, &home.task)
        .into_iter()
        .map(|k| (r[k].0, r[k].2[0].clone()))
        .collect();
    SequencePlan::from_tour(&home.config, &stops, tasks.len())
}

/// Task-space tour, then the IK choice minimising the d_C tour length for
/// that order by dynamic programming over IK layers.
pub fn robotsp_sequence(tasks: &[TaskPoint], arm: &ArmModel, scene: &Scene, home: &Home) -> SequencePlan {
    let r = reachable(tasks, arm, scene);
    let pts: Vec<(usize, TaskPoint)> = r.iter().map(|(i, t, _)| (*i, *t)).collect();
    let order = task_space_order(&pts, &home.task);
    if order.is_empty() {
        return SequencePlan::from_tour(&home.config, &[], tasks.len());
    }
    let layers: Vec<&Vec<JointConfig>> = order.iter().map(|&k| &r[k].2).collect();
    let mut cost: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    cost.push(layers[0].iter().map(|q| config_distance(&home.config, q)).collect());
    back.push(vec![0; layers[0].len()]);
    for n in 1..layers.len() {
        let mut c = Vec::with_capacity(layers[n].len());
        let mut b = Vec::with_capacity(layers[n].len());
        for q in layers[n] {
            let mut best = (0, f64::INFINITY);
            for (i, p) in layers[n - 1].iter().enumerate() {
                let v = cost[n - 1][i] + config_distance(p, q);
                if v < best.1 {
                    best = (i, v);
                }
            }
            c.push(best.1);
            b.push(best.0);
        }
        cost.push(c);
        back.push(b);
    }
    let last = layers.len() - 1;
    let mut pick = (0, f64::INFINITY);
    for (j, q) in layers[last].iter().enumerate() {
        let v = cost[last][j] + config_distance(q, &home.config);
        if v < pick.1 {
            pick = (j, v);
        }
    }
    let mut choice = vec![0; layers.len()];
    choice[last] = pick.0;
    for n in (1..layers.len()).rev() {
        choice[n - 1] = back[n][choice[n]];
    }
    let stops: Vec<(usize, JointConfig)> = order
        .iter()
        .zip(&choice)
        .map(|(&k, &j)| (r[k].0, r[k].2[j].clone()))
        .collect();
    SequencePlan::from_tour(&home.config, &stops, tasks.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtspSolution {
    /// Task indices in visiting order.
    pub order: Vec<usize>,
    /// Chosen configuration per visited task, in visiting order.
    pub configs: Vec<JointConfig>,
    pub cost: f64,
}

impl GtspSolution {
    pub fn to_plan(&self, home: &JointConfig, task_count: usize) -> SequencePlan {
        let stops: Vec<_> = self.order.iter().copied().zip(self.configs.iter().cloned()).collect();
        SequencePlan::from_tour(home, &stops, task_count)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Exhaustive optimum over every visiting order and every IK choice under
/// `oracle` leg costs. Limited to [`GTSP_MAX_TASKS`] tasks with at most
/// [`GTSP_MAX_IK`] solutions each.
pub fn gtsp_bruteforce(
    tasks: &[TaskPoint],
    arm: &ArmModel,
    scene: &Scene,
    oracle: &CostOracle,
) -> Result<GtspSolution> {
    if tasks.len() > GTSP_MAX_TASKS {
        return Err(Error::TooLarge(format!("{} tasks (limit {GTSP_MAX_TASKS})", tasks.len())));
    }
    let sets: Vec<Vec<JointConfig>> = tasks.par_iter().map(|t| ik_solutions(arm, t, scene)).collect();
    for (t, s) in tasks.iter().zip(&sets) {
        if s.is_empty() {
            return Err(Error::NoIkSolutions {
                x: t.position.x,
                y: t.position.y,
            });
        }
        if s.len() > GTSP_MAX_IK {
            return Err(Error::TooLarge(format!("{} IK solutions (limit {GTSP_MAX_IK})", s.len())));
        }
    }
    if tasks.is_empty() {
        return Ok(GtspSolution {
            order: vec![],
            configs: vec![],
            cost: 0.0,
        });
    }

    // flat index: 0 is home, then every (task, ik) pair
    let mut configs = vec![oracle.home().clone()];
    let mut offset = Vec::with_capacity(tasks.len());
    for s in &sets {
        offset.push(configs.len());
        configs.extend(s.iter().cloned());
    }
    let n = configs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let costs: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| oracle.leg_cost(&configs[i], &configs[j]))
        .collect();
    let mut w = vec![vec![0.0; n]; n];
    for (&(i, j), &c) in pairs.iter().zip(&costs) {
        w[i][j] = c;
        w[j][i] = c;
    }

    let combos: usize = sets.iter().map(Vec::len).product();
    let perms = permutations(tasks.len());
    let best = (0..combos)
        .into_par_iter()
        .map(|c| {
            let mut rem = c;
            let pick: Vec<usize> = sets
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let k = rem % s.len();
                    rem /= s.len();
                    offset[t] + k
                })
                .collect();
            let mut best = (f64::INFINITY, usize::MAX);
            for (pi, p) in perms.iter().enumerate() {
                let mut cost = w[0][pick[p[0]]];
                for k in 1..p.len() {
                    cost += w[pick[p[k - 1]]][pick[p[k]]];
                }
                cost += w[pick[*p.last().unwrap()]][0];
                if cost < best.0 {
                    best = (cost, pi);
                }
            }
            (best.0, c, best.1, pick)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .unwrap();
    let (cost, _, pi, pick) = best;
    let order = if pi == usize::MAX { perms[0].clone() } else { perms[pi].clone() };
    Ok(GtspSolution {
        configs: order.iter().map(|&t| configs[pick[t]].clone()).collect(),
        order,
        cost,
    })
}
