//! Decomposition artifacts and plan records.

use std::time::Instant;

use hap_core::decomposition::{decompose, decompose_mobile, verify_gha, VerifyOptions};
use hap_core::motion::{execute_legs, LegOutcome, LegStatus};
use hap_core::sequencer::{sequence, SequencePlan};
use hap_core::taskgraph::build_graph;
use hap_core::{Decomposition, GhaReport, IslandWarning, TaskPoint, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scenario::{Scenario, SCHEMA_VERSION};

pub const ARTIFACT_KIND: &str = "decomposition";
pub const PLAN_KIND: &str = "plan";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub schema_version: u32,
    pub kind: String,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub island_warning: Option<IslandWarning>,
    pub decomposition: Decomposition,
    /// One report per map.
    pub verification: Vec<GhaReport>,
}

impl Artifact {
    pub fn verification_clean(&self) -> bool {
        self.verification.iter().all(GhaReport::is_clean)
    }
}

pub fn verify_options(scenario: &Scenario) -> VerifyOptions {
    VerifyOptions {
        seed: scenario.seed,
        metric: scenario.decomposition.metric,
        ..Default::default()
    }
}

/// Verification of every map against its own graph.
pub fn verify_decomposition(d: &Decomposition, opts: &VerifyOptions) -> Vec<GhaReport> {
    d.maps
        .iter()
        .map(|m| verify_gha(m, d.graph_of(m), d.params.epsilon, opts))
        .collect()
}

/// Offline stage: task graph, decomposition and verification.
pub fn build_artifact(scenario: &Scenario) -> Result<Artifact, CliError> {
    let params = scenario.decomposition_params();
    let offline = scenario.offline_scene();
    let r = &scenario.task_region;
    let (decomposition, island_warning) = if scenario.base_poses.is_empty() {
        let grid = scenario.task_grid()?;
        let (graph, warning) = build_graph(&grid, r.radius(), &scenario.arm, &offline, r.edge_check_count)?;
        (decompose(&graph, &params)?, warning)
    } else {
        let d = decompose_mobile(
            &r.bounds,
            r.spacing,
            r.radius(),
            r.edge_check_count,
            &scenario.base_poses,
            &scenario.arm,
            &offline,
            &params,
        )?;
        (d, None)
    };
    let verification = verify_decomposition(&decomposition, &verify_options(scenario));
    Ok(Artifact {
        schema_version: SCHEMA_VERSION,
        kind: ARTIFACT_KIND.into(),
        scenario: scenario.clone(),
        island_warning,
        decomposition,
        verification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub tasks: usize,
    pub unplanned_tasks: usize,
    pub legs: usize,
    pub successful_legs: usize,
    pub fallback_legs: usize,
    pub seed_config_cost: f64,
    /// Sums and maxima over successful legs only.
    pub executed_config_cost: f64,
    pub exec_time: f64,
    pub max_jerk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRecord {
    pub schema_version: u32,
    pub kind: String,
    pub scenario: Scenario,
    pub tasks: Vec<Vec2>,
    pub plan: SequencePlan,
    pub outcomes: Vec<LegOutcome>,
    pub summary: PlanSummary,
    /// Matching, grouping and TSP time including online IK, excluding
    /// motion planning. Present only with `record_timings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequencing_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_time_s: Option<f64>,
}

impl PlanRecord {
    pub fn fully_planned(&self) -> bool {
        self.summary.unplanned_tasks == 0 && self.summary.successful_legs == self.summary.legs
    }
}

pub fn summarize(tasks: usize, plan: &SequencePlan, outcomes: &[LegOutcome]) -> PlanSummary {
    let ok: Vec<&LegOutcome> = outcomes.iter().filter(|o| o.status != LegStatus::Failed).collect();
    PlanSummary {
        tasks,
        unplanned_tasks: plan.unplanned.len(),
        legs: outcomes.len(),
        successful_legs: ok.len(),
        fallback_legs: ok.iter().filter(|o| o.status == LegStatus::Fallback).count(),
        seed_config_cost: plan.total_config_cost,
        executed_config_cost: ok.iter().filter_map(|o| o.metrics).map(|m| m.config_length).sum(),
        exec_time: ok.iter().filter_map(|o| o.metrics).map(|m| m.exec_time).sum(),
        max_jerk: ok.iter().filter_map(|o| o.metrics).map(|m| m.max_jerk).fold(0.0, f64::max),
    }
}

/// Executes every leg of `plan` in the online scene.
pub fn execute_plan(scenario: &Scenario, plan: &SequencePlan, seed: u64) -> Vec<LegOutcome> {
    let seeds: Vec<_> = plan.legs.iter().map(|l| (l.trajectory.clone(), l.base_pose)).collect();
    execute_legs(&seeds, &scenario.arm, &scenario.scene(), &scenario.motion, seed)
}

/// Online stage: sequence against the artifact and adapt every leg.
pub fn run_sequence(artifact: &Artifact, tasks: &[TaskPoint]) -> Result<PlanRecord, CliError> {
    let s = &artifact.scenario;
    let scene = s.scene();
    let t0 = Instant::now();
    let plan = sequence(tasks, &artifact.decomposition, &s.home_task(), &s.sequencing, &s.arm, &scene)?;
    let seq_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let outcomes = execute_plan(s, &plan, s.seed);
    let plan_time = t1.elapsed().as_secs_f64();
    Ok(PlanRecord {
        schema_version: SCHEMA_VERSION,
        kind: PLAN_KIND.into(),
        scenario: s.clone(),
        tasks: tasks.iter().map(|t| t.position).collect(),
        summary: summarize(tasks.len(), &plan, &outcomes),
        plan,
        outcomes,
        sequencing_time_s: s.record_timings.then_some(seq_time),
        planning_time_s: s.record_timings.then_some(plan_time),
    })
}
