//! Task sequencing for planar serial manipulators using ε-Gromov-Hausdorff
//! subspace decompositions of a discretised task space.
//!
//! The offline stage ([`taskgraph`], [`decomposition`]) builds a graph over
//! task points and partitions it into maps that assign one IK solution per
//! node while keeping configuration distances close to task distances. The
//! online stage ([`sequencer`], [`motion`]) matches new tasks to those maps,
//! solves one TSP per map anchored at a home configuration, and adapts the
//! retrieved trajectories to the online scene. [`baselines`] holds the
//! comparison methods and an exhaustive optimum for small instances.

pub mod baselines;
pub mod decomposition;
pub mod error;
pub mod geom;
pub mod kinematics;
pub mod motion;
pub mod sequencer;
pub mod taskgraph;
pub mod world;

pub use decomposition::{
    decompose, decompose_mobile, generate_map, verify_gha, Decomposition, DecompositionParams,
    GhaMap, GhaReport, Termination, VerifyOptions, VisitCounts,
};
pub use error::{Error, Result};
pub use geom::{Aabb, Vec2};
pub use kinematics::{
    config_distance, forward_kinematics, ik_solutions, task_distance, ArmModel, ConfigMetric,
    JointConfig, TaskPoint,
};
pub use motion::{Trajectory, TrajectoryMetrics, TrajectorySource};
pub use sequencer::{SequencePlan, TaskMatch};
pub use taskgraph::{build_graph, build_task_grid, IslandWarning, TaskGraph};
pub use world::{config_valid, motion_valid, Obstacle, ObstacleTag, Scene, Shape};
