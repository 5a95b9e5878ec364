//! Randomised benchmark sweep over task counts and trials.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use hap_core::baselines::{naive_sequence, robotsp_sequence, CostOracle, Home};
use hap_core::ik_solutions;
use hap_core::motion::derive_seed;
use hap_core::sequencer::{sequence, SequencePlan};
use hap_core::{Decomposition, TaskPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{build_artifact, execute_plan, summarize};
use crate::error::CliError;
use crate::scenario::{Scenario, SCHEMA_VERSION};

pub const BENCH_KIND: &str = "bench";
const SAMPLE_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hap,
    HapNoPrior,
    Naive,
    Robotsp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hap, Method::HapNoPrior, Method::Naive, Method::Robotsp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hap => "hap",
            Method::HapNoPrior => "hap_no_prior",
            Method::Naive => "naive",
            Method::Robotsp => "robotsp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub task_count: usize,
    pub trial: usize,
    pub seed: u64,
    pub legs: usize,
    pub successful_legs: usize,
    pub fallback_legs: usize,
    pub unplanned_tasks: usize,
    /// successful_legs / legs, or 0 when no leg was planned.
    pub success_rate: f64,
    pub seed_config_cost: f64,
    /// Plan cost under the trial's shared oracle; `None` when infinite.
    pub oracle_cost: Option<f64>,
    /// Sum over successful legs.
    pub exec_time: f64,
    /// Max over successful legs; `None` without any.
    pub max_jerk: Option<f64>,
    /// Every leg checked again at half the planning step.
    pub half_step_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequencing_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_time_s: Option<f64>,
}

impl BenchRow {
    pub fn fully_successful(&self) -> bool {
        self.unplanned_tasks == 0 && self.legs > 0 && self.successful_legs == self.legs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub method: Method,
    pub task_count: usize,
    pub trials: usize,
    pub success_rate_mean: f64,
    /// Over fully successful trials only.
    pub successful_trials: usize,
    pub exec_time_mean: Option<f64>,
    /// Over trials with at least one successful leg.
    pub max_jerk_mean: Option<f64>,
    pub max_jerk_std: Option<f64>,
    /// Over trials with a finite oracle cost.
    pub oracle_cost_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequencing_time_mean_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_time_total_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub schema_version: u32,
    pub kind: String,
    pub seed: u64,
    pub task_counts: Vec<usize>,
    pub trials: usize,
    /// Jerk excludes the two boundary samples at each end of a leg.
    pub jerk_note: String,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn std_dev(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
}

/// Aggregates rows of one method and task count.
pub fn aggregate(method: Method, task_count: usize, rows: &[&BenchRow]) -> BenchSummary {
    let rates: Vec<f64> = rows.iter().map(|r| r.success_rate).collect();
    let exec: Vec<f64> = rows.iter().filter(|r| r.fully_successful()).map(|r| r.exec_time).collect();
    let jerk: Vec<f64> = rows.iter().filter_map(|r| r.max_jerk).collect();
    let cost: Vec<f64> = rows.iter().filter_map(|r| r.oracle_cost).collect();
    let seq: Vec<f64> = rows.iter().filter_map(|r| r.sequencing_time_s).collect();
    let plan: Vec<f64> = rows.iter().filter_map(|r| r.planning_time_s).collect();
    BenchSummary {
        method,
        task_count,
        trials: rows.len(),
        success_rate_mean: mean(&rates).unwrap_or(0.0),
        successful_trials: exec.len(),
        exec_time_mean: mean(&exec),
        max_jerk_mean: mean(&jerk),
        max_jerk_std: std_dev(&jerk),
        oracle_cost_mean: mean(&cost),
        sequencing_time_mean_s: mean(&seq),
        planning_time_total_s: (!plan.is_empty()).then(|| plan.iter().sum()),
    }
}

/// Uniform samples from the task region with at least one valid IK
/// solution in the online scene.
pub fn sample_tasks(scenario: &Scenario, count: usize, seed: u64) -> Result<Vec<TaskPoint>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = scenario.scene();
    let b = scenario.task_region.bounds;
    let mut out = Vec::with_capacity(count);
    for _ in 0..SAMPLE_ATTEMPTS {
        if out.len() == count {
            break;
        }
        let t = TaskPoint::new(rng.gen_range(b.min.x..=b.max.x), rng.gen_range(b.min.y..=b.max.y));
        if scenario.task_region.contains(t.position, scenario.arm.base_position)
            && !ik_solutions(&scenario.arm, &t, &scene).is_empty()
        {
            out.push(t);
        }
    }
    if out.len() < count {
        return Err(CliError::Input("task region has too few reachable points to sample from".into()));
    }
    Ok(out)
}

fn run_trial(
    scenario: &Scenario,
    decomposition: &Decomposition,
    task_count: usize,
    trial: usize,
) -> Result<Vec<BenchRow>, CliError> {
    let seed = derive_seed(scenario.seed, ((task_count as u64) << 32) | trial as u64);
    let tasks = sample_tasks(scenario, task_count, seed)?;
    let scene = scenario.scene();
    let arm = &scenario.arm;
    let half = hap_core::motion::MotionParams {
        step: scenario.motion.step / 2.0,
        ..scenario.motion.clone()
    };

    let t0 = Instant::now();
    let hap = sequence(&tasks, decomposition, &scenario.home_task(), &scenario.sequencing, arm, &scene)?;
    let hap_seq_time = t0.elapsed().as_secs_f64();
    let home = Home {
        task: scenario.home_task(),
        config: hap.home_config.clone(),
    };
    let oracle = CostOracle::new(arm.clone(), scene.clone(), scenario.motion.clone(), home.config.clone(), derive_seed(seed, 99));

    let mut rows = Vec::with_capacity(Method::ALL.len());
    for (mi, method) in Method::ALL.into_iter().enumerate() {
        let t = Instant::now();
        let plan: SequencePlan = match method {
            Method::Hap => hap.clone(),
            Method::HapNoPrior => hap.with_straight_seeds(),
            Method::Naive => naive_sequence(&tasks, arm, &scene, &home),
            Method::Robotsp => robotsp_sequence(&tasks, arm, &scene, &home),
        };
        let seq_time = match method {
            Method::Hap | Method::HapNoPrior => hap_seq_time,
            _ => t.elapsed().as_secs_f64(),
        };
        let t = Instant::now();
        let outcomes = execute_plan(scenario, &plan, derive_seed(seed, mi as u64));
        let plan_time = t.elapsed().as_secs_f64();
        let s = summarize(tasks.len(), &plan, &outcomes);
        let half_step_valid = outcomes
            .iter()
            .filter_map(|o| o.trajectory.as_ref())
            .all(|tr| tr.is_valid(arm, &scene, half.step));
        let cost = oracle.plan_cost(&plan);
        rows.push(BenchRow {
            method,
            task_count,
            trial,
            seed,
            legs: s.legs,
            successful_legs: s.successful_legs,
            fallback_legs: s.fallback_legs,
            unplanned_tasks: s.unplanned_tasks,
            success_rate: if s.legs == 0 { 0.0 } else { s.successful_legs as f64 / s.legs as f64 },
            seed_config_cost: s.seed_config_cost,
            oracle_cost: cost.is_finite().then_some(cost),
            exec_time: s.exec_time,
            max_jerk: (s.successful_legs > 0).then_some(s.max_jerk),
            half_step_valid,
            sequencing_time_s: scenario.record_timings.then_some(seq_time),
            planning_time_s: scenario.record_timings.then_some(plan_time),
        });
    }
    Ok(rows)
}

/// Path of the line-per-trial file written while a sweep runs.
pub fn partial_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial.jsonl");
    s.into()
}

/// Runs the sweep. When `partial` is given, each finished trial's rows are
/// appended to it as JSON lines so an interrupted run keeps its results.
pub fn run_bench(scenario: &Scenario, partial: Option<&Path>) -> Result<BenchReport, CliError> {
    if !scenario.base_poses.is_empty() {
        return Err(CliError::Input("bench does not support base_poses".into()));
    }
    let artifact = build_artifact(scenario)?;
    let sink: Option<Mutex<File>> = match partial {
        Some(p) => Some(Mutex::new(
            OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(p)
                .map_err(|e| CliError::io(p, e))?,
        )),
        None => None,
    };
    let jobs: Vec<(usize, usize)> = scenario
        .bench
        .task_counts
        .iter()
        .flat_map(|&c| (0..scenario.bench.trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<Result<Vec<BenchRow>, CliError>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let rows = run_trial(scenario, &artifact.decomposition, c, t)?;
            if let (Some(sink), Some(p)) = (&sink, partial) {
                let mut f = sink.lock().unwrap();
                for r in &rows {
                    writeln!(f, "{}", serde_json::to_string(r).expect("row serialises"))
                        .map_err(|e| CliError::io(p, e))?;
                }
                f.flush().map_err(|e| CliError::io(p, e))?;
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut summary = Vec::new();
    for &c in &scenario.bench.task_counts {
        for m in Method::ALL {
            let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m && r.task_count == c).collect();
            summary.push(aggregate(m, c, &sel));
        }
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        kind: BENCH_KIND.into(),
        seed: scenario.seed,
        task_counts: scenario.bench.task_counts.clone(),
        trials: scenario.bench.trials,
        jerk_note: "max jerk excludes two boundary samples at each end of every leg".into(),
        rows,
        summary,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

/// Human-readable summary table.
pub fn summary_table(report: &BenchReport) -> String {
    let mut s = format!(
        "{:<14} {:>5} {:>7} {:>9} {:>9} {:>10} {:>10} {:>10}\n",
        "method", "tasks", "trials", "success", "exec_s", "jerk_mean", "jerk_std", "oracle"
    );
    for r in &report.summary {
        s += &format!(
            "{:<14} {:>5} {:>7} {:>9.3} {:>9} {:>10} {:>10} {:>10}\n",
            r.method.name(),
            r.task_count,
            r.trials,
            r.success_rate_mean,
            opt(r.exec_time_mean),
            opt(r.max_jerk_mean),
            opt(r.max_jerk_std),
            opt(r.oracle_cost_mean),
        );
    }
    s
}
