//! Planar serial-arm model: forward kinematics, IK candidate enumeration and
//! the configuration/task metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::world::{config_valid, Scene};

/// Tolerance for the forward-kinematics round trip of every IK solution.
pub const IK_TOLERANCE: f64 = 1e-9;
/// Two IK solutions closer than this (L∞) are considered duplicates.
pub const IK_DEDUP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmModel {
    pub link_lengths: Vec<f64>,
    pub joint_limits: Vec<(f64, f64)>,
    pub link_thickness: Vec<f64>,
    #[serde(default)]
    pub base_position: Vec2,
    pub max_joint_velocity: Vec<f64>,
    #[serde(default = "default_free_joint_resolution")]
    pub free_joint_resolution: f64,
}

fn default_free_joint_resolution() -> f64 {
    0.1
}

impl ArmModel {
    /// Arm with the given link lengths, ±π limits, 2 cm capsules, 1 rad/s
    /// joints and the base at the origin.
    pub fn planar(link_lengths: &[f64]) -> Self {
        let n = link_lengths.len();
        Self {
            link_lengths: link_lengths.to_vec(),
            joint_limits: vec![(-PI, PI); n],
            link_thickness: vec![0.02; n],
            base_position: Vec2::default(),
            max_joint_velocity: vec![1.0; n],
            free_joint_resolution: default_free_joint_resolution(),
        }
    }

    pub fn with_base(mut self, base: Vec2) -> Self {
        self.base_position = base;
        self
    }

    pub fn with_thickness(mut self, t: f64) -> Self {
        self.link_thickness = vec![t; self.dof()];
        self
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dof();
        let bad = |m: &str| Err(Error::InvalidInput(format!("arm: {m}")));
        if !(2..=3).contains(&n) {
            return bad("degrees of freedom must be 2 or 3");
        }
        if self.joint_limits.len() != n
            || self.link_thickness.len() != n
            || self.max_joint_velocity.len() != n
        {
            return bad("per-joint vectors must match the number of links");
        }
        if self.link_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return bad("link lengths must be positive");
        }
        if self.link_thickness.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("link thickness must be positive");
        }
        if self.max_joint_velocity.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("joint velocity limits must be positive");
        }
        if self.joint_limits.iter().any(|(lo, hi)| !(lo < hi)) {
            return bad("joint limits must satisfy lower < upper");
        }
        if !(self.free_joint_resolution > 0.0) {
            return bad("free_joint_resolution must be positive");
        }
        if !self.base_position.is_finite() {
            return bad("base position must be finite");
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.dof() == self.dof()
            && q.0
                .iter()
                .zip(&self.joint_limits)
                .all(|(a, (lo, hi))| a.is_finite() && *a >= *lo && *a <= *hi)
    }

    pub fn clamp(&self, q: &mut JointConfig) {
        for (a, (lo, hi)) in q.0.iter_mut().zip(&self.joint_limits) {
            *a = a.clamp(*lo, *hi);
        }
    }
}

/// Joint angles in radians. Angles are never wrapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(angles: impl Into<Vec<f64>>) -> Self {
        Self(angles.into())
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn lerp(&self, other: &JointConfig, s: f64) -> JointConfig {
        JointConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + (b - a) * s)
                .collect(),
        )
    }

    pub fn l2_distance(&self, other: &JointConfig) -> f64 {
        ConfigMetric::L2.distance(self, other)
    }

    fn lex_cmp(&self, other: &JointConfig) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigMetric {
    #[default]
    LInf,
    L2,
}

impl ConfigMetric {
    pub fn distance(self, a: &JointConfig, b: &JointConfig) -> f64 {
        assert_eq!(a.dof(), b.dof(), "configuration dimension mismatch");
        let diffs = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs());
        match self {
            ConfigMetric::LInf => diffs.fold(0.0, f64::max),
            ConfigMetric::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }
}

/// d_C with the default L∞ norm.
pub fn config_distance(a: &JointConfig, b: &JointConfig) -> f64 {
    ConfigMetric::LInf.distance(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskPoint {
    pub position: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_index: Option<usize>,
}

impl TaskPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            position: Vec2::new(x, y),
            base_index: None,
        }
    }

    pub fn on_base(mut self, base: usize) -> Self {
        self.base_index = Some(base);
        self
    }
}

/// d_T: Euclidean distance between task positions on the same base pose.
pub fn task_distance(s: &TaskPoint, t: &TaskPoint) -> Result<f64> {
    if s.base_index != t.base_index {
        return Err(Error::BaseMismatch(s.base_index, t.base_index));
    }
    Ok(s.position.distance(t.position))
}

/// Tip position and every joint position (base first), `dof + 1` points.
pub fn forward_kinematics(arm: &ArmModel, q: &JointConfig) -> (Vec2, Vec<Vec2>) {
    let mut joints = Vec::with_capacity(arm.dof() + 1);
    let mut p = arm.base_position;
    let mut heading = 0.0;
    joints.push(p);
    for (len, a) in arm.link_lengths.iter().zip(&q.0) {
        heading += a;
        p = p + Vec2::new(heading.cos(), heading.sin()) * *len;
        joints.push(p);
    }
    (p, joints)
}

/// Absolute heading of the first link and relative elbow angle for both
/// elbow branches of a two-link chain reaching `p` from the origin.
fn two_link_branches(l1: f64, l2: f64, p: Vec2) -> Vec<(f64, f64)> {
    let r2 = p.dot(p);
    let c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&c2) {
        return Vec::new();
    }
    let elbow = c2.clamp(-1.0, 1.0).acos();
    [elbow, -elbow]
        .into_iter()
        .map(|q2| {
            let q1 = p.y.atan2(p.x) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
            (q1, q2)
        })
        .collect()
}

/// Every 2π-shift of `angle` that lies inside `limits`.
fn shifted_into(angle: f64, (lo, hi): (f64, f64)) -> impl Iterator<Item = f64> {
    (-2..=2).filter_map(move |k| {
        let a = angle + 2.0 * PI * k as f64;
        (a >= lo - 1e-12 && a <= hi + 1e-12).then(|| a.clamp(lo, hi))
    })
}

/// Kinematic solutions without collision filtering, in raw generation order.
fn raw_ik(arm: &ArmModel, target: Vec2) -> Vec<JointConfig> {
    let rel = target - arm.base_position;
    let l = &arm.link_lengths;
    let lim = &arm.joint_limits;
    let mut out = Vec::new();
    match arm.dof() {
        2 => {
            for (q1, q2) in two_link_branches(l[0], l[1], rel) {
                for a in shifted_into(q1, lim[0]) {
                    for b in shifted_into(q2, lim[1]) {
                        out.push(JointConfig(vec![a, b]));
                    }
                }
            }
        }
        3 => {
            let (lo, hi) = lim[0];
            let steps = ((hi - lo) / arm.free_joint_resolution + 1e-9).floor() as usize;
            for k in 0..=steps {
                let q1 = lo + k as f64 * arm.free_joint_resolution;
                let wrist = rel - Vec2::new(q1.cos(), q1.sin()) * l[0];
                for (phi, q3) in two_link_branches(l[1], l[2], wrist) {
                    for b in shifted_into(phi - q1, lim[1]) {
                        for c in shifted_into(q3, lim[2]) {
                            out.push(JointConfig(vec![q1, b, c]));
                        }
                    }
                }
            }
        }
        _ => {}
    }
    out.retain(|q| {
        arm.within_limits(q) && forward_kinematics(arm, q).0.distance(target) <= IK_TOLERANCE
    });
    out
}

/// Valid IK set Q(t): exact, in-limit, collision-free, deduplicated and
/// sorted lexicographically.
pub fn ik_solutions(arm: &ArmModel, t: &TaskPoint, scene: &Scene) -> Vec<JointConfig> {
    if !t.position.is_finite() {
        return Vec::new();
    }
    let mut sols = raw_ik(arm, t.position);
    sols.retain(|q| config_valid(arm, q, scene));
    sols.sort_by(|a, b| a.lex_cmp(b));
    let mut kept: Vec<JointConfig> = Vec::with_capacity(sols.len());
    for q in sols {
        if kept
            .iter()
            .all(|k| config_distance(k, &q) > IK_DEDUP_TOLERANCE)
        {
            kept.push(q);
        }
    }
    kept
}
