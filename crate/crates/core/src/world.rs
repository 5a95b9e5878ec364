//! 2-D collision environment and configuration/motion validity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, segment_segment_distance, Aabb, Vec2};
use crate::kinematics::{config_distance, forward_kinematics, ArmModel, JointConfig};

/// Default interpolation step for motion checks (radians, L∞).
pub const DEFAULT_MOTION_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Rect { min: Vec2, max: Vec2 },
    Circle { center: Vec2, radius: f64 },
}

impl Shape {
    pub fn rect(min: (f64, f64), max: (f64, f64)) -> Self {
        Shape::Rect {
            min: Vec2::new(min.0, min.1),
            max: Vec2::new(max.0, max.1),
        }
    }

    pub fn circle(center: (f64, f64), radius: f64) -> Self {
        Shape::Circle {
            center: Vec2::new(center.0, center.1),
            radius,
        }
    }

    pub fn segment_distance(&self, a: Vec2, b: Vec2) -> f64 {
        match *self {
            Shape::Rect { min, max } => Aabb::new(min, max).segment_distance(a, b),
            Shape::Circle { center, radius } => {
                (point_segment_distance(center, a, b) - radius).max(0.0)
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Shape::Rect { min, max } => Aabb::new(min, max).contains(p),
            Shape::Circle { center, radius } => center.distance(p) <= radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Rect { min, max } => {
                min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y
            }
            Shape::Circle { center, radius } => center.is_finite() && radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate obstacle {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleTag {
    #[default]
    Offline,
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: Shape,
    #[serde(default)]
    pub tag: ObstacleTag,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn new(shapes: impl IntoIterator<Item = Shape>) -> Self {
        Self {
            obstacles: shapes
                .into_iter()
                .map(|shape| Obstacle {
                    shape,
                    tag: ObstacleTag::Offline,
                })
                .collect(),
        }
    }

    pub fn with_online(mut self, shapes: impl IntoIterator<Item = Shape>) -> Self {
        self.obstacles.extend(shapes.into_iter().map(|shape| Obstacle {
            shape,
            tag: ObstacleTag::Online,
        }));
        self
    }

    /// The offline model m only.
    pub fn offline(&self) -> Scene {
        Scene {
            obstacles: self
                .obstacles
                .iter()
                .filter(|o| o.tag == ObstacleTag::Offline)
                .copied()
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.obstacles.iter().try_for_each(|o| o.shape.validate())
    }
}

/// True iff no link capsule touches an obstacle and no non-adjacent pair of
/// links touches each other.
pub fn config_valid(arm: &ArmModel, q: &JointConfig, scene: &Scene) -> bool {
    let (_, joints) = forward_kinematics(arm, q);
    let n = arm.dof();
    for k in 0..n {
        let (a, b) = (joints[k], joints[k + 1]);
        let r = arm.link_thickness[k];
        if scene
            .obstacles
            .iter()
            .any(|o| o.shape.segment_distance(a, b) < r)
        {
            return false;
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            let d = segment_segment_distance(joints[i], joints[i + 1], joints[j], joints[j + 1]);
            if d < arm.link_thickness[i] + arm.link_thickness[j] {
                return false;
            }
        }
    }
    true
}

/// Number of interpolation intervals used for a segment: the smallest power
/// of two keeping consecutive samples within `step` in L∞. Powers of two
/// make every refinement a superset of the coarser sample set.
pub fn interpolation_intervals(a: &JointConfig, b: &JointConfig, step: f64) -> usize {
    let d = config_distance(a, b);
    let mut n = 1usize;
    while d / n as f64 > step && n < (1 << 30) {
        n *= 2;
    }
    n
}

/// Samples the straight configuration segment (endpoints included) and
/// checks every sample. Endpoints are ordered canonically so the result is
/// symmetric in `a` and `b`.
pub fn motion_valid(
    arm: &ArmModel,
    a: &JointConfig,
    b: &JointConfig,
    scene: &Scene,
    step: f64,
) -> bool {
    assert!(step > 0.0, "interpolation step must be positive");
    let (a, b) = if a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
        == Some(std::cmp::Ordering::Greater)
    {
        (b, a)
    } else {
        (a, b)
    };
    let n = interpolation_intervals(a, b, step);
    (0..=n).all(|i| {
        let q = if i == n { b.clone() } else { a.lerp(b, i as f64 / n as f64) };
        config_valid(arm, &q, scene)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn arm2() -> ArmModel {
        ArmModel::planar(&[1.0, 1.0])
    }

    #[test]
    fn empty_scene_always_valid() {
        let arm = arm2();
        for q in [[0.0, 0.0], [1.0, -2.0], [PI, PI]] {
            assert!(config_valid(&arm, &JointConfig::new(q), &Scene::default()));
        }
    }

    #[test]
    fn box_on_second_link() {
        let scene = Scene::new([Shape::rect((1.5, -0.1), (1.7, 0.1))]);
        assert!(!config_valid(&arm2(), &JointConfig::new([0.0, 0.0]), &scene));
        assert!(config_valid(&arm2(), &JointConfig::new([PI / 2.0, 0.0]), &scene));
    }

    #[test]
    fn circle_obstacle() {
        let scene = Scene::new([Shape::circle((0.0, 1.5), 0.1)]);
        assert!(!config_valid(&arm2(), &JointConfig::new([PI / 2.0, 0.0]), &scene));
        assert!(config_valid(&arm2(), &JointConfig::new([0.0, 0.0]), &scene));
    }

    #[test]
    fn folded_three_link_self_collides() {
        let arm = ArmModel::planar(&[1.0, 0.6, 1.0]);
        // link 2 turns back by 150°, link 3 turns back again and crosses link 1
        let q = JointConfig::new([0.0, 2.6, 2.4]);
        let (_, j) = forward_kinematics(&arm, &q);
        assert!(crate::geom::segments_intersect(j[0], j[1], j[2], j[3]));
        assert!(!config_valid(&arm, &q, &Scene::default()));
        let open = JointConfig::new([0.0, 0.3, 0.3]);
        let (_, j) = forward_kinematics(&arm, &open);
        assert!(!crate::geom::segments_intersect(j[0], j[1], j[2], j[3]));
        assert!(config_valid(&arm, &open, &Scene::default()));
    }

    #[test]
    fn motion_through_box_detected() {
        let arm = arm2();
        let a = JointConfig::new([0.0, 0.0]);
        let b = JointConfig::new([PI / 2.0, 0.0]);
        // dense oracle: tip positions along the sweep
        let mid_tip = forward_kinematics(&arm, &a.lerp(&b, 0.5)).0;
        let scene = Scene::new([Shape::rect(
            (mid_tip.x - 0.05, mid_tip.y - 0.05),
            (mid_tip.x + 0.05, mid_tip.y + 0.05),
        )]);
        assert!(config_valid(&arm, &a, &scene));
        assert!(config_valid(&arm, &b, &scene));
        assert!(!motion_valid(&arm, &a, &b, &scene, DEFAULT_MOTION_STEP));
        assert!(!motion_valid(&arm, &b, &a, &scene, DEFAULT_MOTION_STEP));
        assert!(motion_valid(&arm, &a, &a, &scene, DEFAULT_MOTION_STEP));
        assert!(motion_valid(&arm, &a, &b, &Scene::default(), DEFAULT_MOTION_STEP));
    }

    #[test]
    fn intervals_are_powers_of_two() {
        let a = JointConfig::new([0.0, 0.0]);
        let b = JointConfig::new([0.33, 0.0]);
        assert_eq!(interpolation_intervals(&a, &b, 0.05), 8);
        assert_eq!(interpolation_intervals(&a, &b, 0.025), 16);
        assert_eq!(interpolation_intervals(&a, &a, 0.05), 1);
    }

    /// Oracle: sample points densely along each capsule's axis and test the
    /// disc around each point against the raw shape.
    fn sampled_collision(arm: &ArmModel, q: &JointConfig, scene: &Scene) -> bool {
        let (_, joints) = forward_kinematics(arm, q);
        for k in 0..arm.dof() {
            let r = arm.link_thickness[k];
            for s in 0..=400 {
                let p = joints[k].lerp(joints[k + 1], s as f64 / 400.0);
                for o in &scene.obstacles {
                    let hit = match o.shape {
                        Shape::Rect { min, max } => Aabb::new(min, max).point_distance(p) < r,
                        Shape::Circle { center, radius } => center.distance(p) < radius + r,
                    };
                    if hit {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn agrees_with_sampling_oracle() {
        let arm = arm2().with_thickness(0.03);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut agree = 0;
        let mut total = 0;
        for _ in 0..100 {
            let mut shapes = Vec::new();
            for _ in 0..3 {
                let c = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                if rng.gen_bool(0.5) {
                    let w = rng.gen_range(0.05..0.4);
                    let h = rng.gen_range(0.05..0.4);
                    shapes.push(Shape::rect((c.x, c.y), (c.x + w, c.y + h)));
                } else {
                    shapes.push(Shape::circle((c.x, c.y), rng.gen_range(0.05..0.3)));
                }
            }
            let scene = Scene::new(shapes);
            for _ in 0..20 {
                let q = JointConfig::new([rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)]);
                total += 1;
                let fast = !config_valid(&arm, &q, &scene);
                let slow = sampled_collision(&arm, &q, &scene);
                if fast == slow {
                    agree += 1;
                } else {
                    // disagreement is only allowed when the link grazes the
                    // obstacle within the oracle's sampling resolution
                    assert!(fast && !slow, "oracle saw a collision the checker missed");
                }
            }
        }
        assert!(agree as f64 / total as f64 >= 0.99, "{agree}/{total}");
    }

    proptest! {
        #[test]
        fn motion_valid_symmetric_and_refinement_monotone(
            a in proptest::collection::vec(-PI..PI, 2),
            b in proptest::collection::vec(-PI..PI, 2),
            cx in -1.5f64..1.5, cy in -1.5f64..1.5,
        ) {
            let arm = arm2();
            let scene = Scene::new([Shape::circle((cx, cy), 0.2)]);
            let (a, b) = (JointConfig(a), JointConfig(b));
            let coarse = motion_valid(&arm, &a, &b, &scene, 0.1);
            prop_assert_eq!(coarse, motion_valid(&arm, &b, &a, &scene, 0.1));
            let fine = motion_valid(&arm, &a, &b, &scene, 0.05);
            prop_assert!(coarse || !fine);
        }
    }
}
