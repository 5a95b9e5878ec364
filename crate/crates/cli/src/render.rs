//! SVG figures of decomposition artifacts and plan records.

use std::fmt::Write;

use hap_core::{forward_kinematics, ArmModel, JointConfig, Shape, Vec2};

use crate::artifact::{Artifact, PlanRecord};
use crate::scenario::Scenario;

const SIZE: f64 = 640.0;
const PALETTE: [&str; 8] = [
    "#2e8b57", "#1f77b4", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Canvas {
    min: Vec2,
    scale: f64,
    height: f64,
    out: String,
}

impl Canvas {
    fn new(lo: Vec2, hi: Vec2) -> Self {
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
        let scale = SIZE / span;
        let height = (hi.y - lo.y) * scale;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
            (hi.x - lo.x) * scale,
            height,
            (hi.x - lo.x) * scale,
            height
        );
        out.push_str(concat!(
            "<defs>",
            r#"<pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">"#,
            r##"<rect width="4" height="4" fill="#1b5e20"/><line x1="0" y1="0" x2="0" y2="4" stroke="#ffffff" stroke-width="1.5"/>"##,
            "</pattern>",
            r#"<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse">"#,
            r#"<path d="M 0 0 L 10 5 L 0 10 z" fill="context-stroke"/></marker>"#,
            "</defs>\n",
            r##"<rect width="100%" height="100%" fill="#ffffff"/>"##,
            "\n"
        ));
        Self {
            min: lo,
            scale,
            height,
            out,
        }
    }

    fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale, self.height - (p.y - self.min.y) * self.scale)
    }

    fn shape(&mut self, s: &Shape, fill: &str, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        match *s {
            Shape::Rect { min, max } => {
                let (x0, y1) = self.px(min);
                let (x1, y0) = self.px(max);
                let _ = writeln!(
                    self.out,
                    r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="#333333"{dash}/>"##,
                    x1 - x0,
                    y1 - y0
                );
            }
            Shape::Circle { center, radius } => {
                let (cx, cy) = self.px(center);
                let _ = writeln!(
                    self.out,
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="{fill}" stroke="#333333"{dash}/>"##,
                    radius * self.scale
                );
            }
        }
    }

    fn dot(&mut self, p: Vec2, r: f64, fill: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(self.out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}"/>"#);
    }

    fn polyline(&mut self, pts: &[Vec2], stroke: &str, width: f64, arrow: bool) {
        let mut d = String::new();
        for p in pts {
            let (x, y) = self.px(*p);
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let marker = if arrow { r#" marker-end="url(#arrow)""# } else { "" };
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{marker}/>"#,
            d.trim_end()
        );
    }

    fn text(&mut self, p: Vec2, s: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{s}</text>"#, x + 4.0, y - 4.0);
    }

    fn arm(&mut self, arm: &ArmModel, q: &JointConfig, stroke: &str) {
        let (_, joints) = forward_kinematics(arm, q);
        self.polyline(&joints, stroke, 2.5, false);
        for j in &joints {
            self.dot(*j, 2.5, "#222222");
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn canvas_for(s: &Scenario) -> Canvas {
    let bases: Vec<Vec2> = if s.base_poses.is_empty() {
        vec![s.arm.base_position]
    } else {
        s.base_poses.clone()
    };
    let reach = s.arm.reach() * 1.05;
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2| {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    };
    for b in &bases {
        grow(Vec2::new(b.x - reach, b.y - reach));
        grow(Vec2::new(b.x + reach, b.y + reach));
    }
    grow(s.task_region.bounds.min);
    grow(s.task_region.bounds.max);
    let mut c = Canvas::new(lo, hi);
    for o in &s.obstacles {
        c.shape(o, "#9e9e9e", false);
    }
    for o in &s.online_obstacles {
        c.shape(o, "#ffcc80", true);
    }
    for b in &bases {
        c.dot(*b, 4.0, "#000000");
    }
    c
}

fn node_radius(s: &Scenario, scale: f64) -> f64 {
    (s.task_region.spacing * scale * 0.3).clamp(1.0, 6.0)
}

/// Task grid coloured by map, nodes shared by several maps hatched, and
/// each map's root pose.
pub fn render_artifact(a: &Artifact) -> String {
    let s = &a.scenario;
    let mut c = canvas_for(s);
    let r = node_radius(s, c.scale);
    let d = &a.decomposition;
    for (gi, g) in d.graphs.iter().enumerate() {
        for (n, node) in g.nodes.iter().enumerate() {
            let owners: Vec<usize> = d
                .maps
                .iter()
                .enumerate()
                .filter(|(_, m)| m.graph_index == gi && m.config(n).is_some())
                .map(|(i, _)| i)
                .collect();
            let fill = match owners.as_slice() {
                [] => "#d0d0d0".to_string(),
                [i] => PALETTE[i % PALETTE.len()].to_string(),
                _ => "url(#hatch)".to_string(),
            };
            c.dot(node.position, r, &fill);
        }
    }
    for (i, m) in d.maps.iter().enumerate() {
        let arm = d.arm_for(m, &s.arm);
        c.arm(&arm, &m.root_config, PALETTE[i % PALETTE.len()]);
    }
    c.finish()
}

/// End-effector traces of every executed leg with direction arrows.
pub fn render_plan(p: &PlanRecord) -> String {
    let s = &p.scenario;
    let mut c = canvas_for(s);
    c.arm(&s.arm, &p.plan.home_config, "#555555");
    for (leg, out) in p.plan.legs.iter().zip(&p.outcomes) {
        let arm = match leg.base_pose {
            Some(b) => s.arm.clone().with_base(b),
            None => s.arm.clone(),
        };
        let (traj, colour) = match &out.trajectory {
            Some(t) => (t, leg.map_index.map_or("#444444", |m| PALETTE[m % PALETTE.len()])),
            None => (&leg.trajectory, "#d62728"),
        };
        let mut pts = Vec::new();
        for w in traj.waypoints.windows(2) {
            let n = (hap_core::config_distance(&w[0], &w[1]) / 0.02).ceil().max(1.0) as usize;
            for k in 0..n {
                pts.push(forward_kinematics(&arm, &w[0].lerp(&w[1], k as f64 / n as f64)).0);
            }
        }
        pts.push(forward_kinematics(&arm, traj.end()).0);
        c.polyline(&pts, colour, 1.5, true);
    }
    for (i, t) in p.tasks.iter().enumerate() {
        c.dot(*t, 3.5, "#000000");
        c.text(*t, &i.to_string());
    }
    c.finish()
}

/// Scene, task region and base only.
pub fn render_scenario(s: &Scenario) -> String {
    canvas_for(s).finish()
}
