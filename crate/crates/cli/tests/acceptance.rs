//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use hap_cli::artifact::{build_artifact, run_sequence};
use hap_cli::bench::{run_bench, sample_tasks, Method};
use hap_cli::presets;
use hap_core::baselines::{gtsp_bruteforce, naive_sequence, robotsp_sequence, CostOracle, Home};
use hap_core::motion::{derive_seed, max_jerk_norm, MotionParams};
use hap_core::sequencer::{sequence, solve_tsp, tour_cost};
use hap_core::{config_distance, ik_solutions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn edge_condition() -> Outcome {
    let s = presets::band();
    let t = Instant::now();
    let a = build_artifact(&s).expect("band scenario decomposes");
    let secs = t.elapsed().as_secs_f64();
    let eps = a.decomposition.params.epsilon;
    let mut edges = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for m in &a.decomposition.maps {
        let g = a.decomposition.graph_of(m);
        for &(c, p) in &m.tree_edges {
            let d_t = g.nodes[c].position.distance(g.nodes[p].position);
            let d_c = config_distance(m.config(c).unwrap(), m.config(p).unwrap());
            let gap = (d_c - d_t).abs();
            worst = worst.max(gap);
            edges += 1;
            if !(gap < eps) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && edges > 0 && secs < 10.0,
        format!("{edges} tree edges, {violations} violations, max gap {worst:.4} < eps {eps}, {secs:.2} s"),
    )
}

fn hop_bound() -> Outcome {
    let a = build_artifact(&presets::band()).unwrap();
    let per_map: Vec<(usize, usize)> = a
        .verification
        .iter()
        .map(|r| (r.pairs_checked, r.hop_bound_violations.len()))
        .collect();
    let pass = per_map.iter().all(|&(n, v)| n >= 1000 && v == 0);
    outcome(pass, format!("(pairs, violations) per map: {per_map:?}"))
}

fn geodesic_bound() -> Outcome {
    let a = build_artifact(&presets::band()).unwrap();
    let per_map: Vec<(usize, usize)> = a
        .verification
        .iter()
        .map(|r| (r.geodesics_checked, r.geodesic_bound_violations.len()))
        .collect();
    let pass = per_map.iter().all(|&(n, v)| n >= 200 && v == 0);
    outcome(pass, format!("(geodesics, violations) per map: {per_map:?}"))
}

fn disjointness() -> Outcome {
    let a = build_artifact(&presets::band()).unwrap();
    let maps = &a.decomposition.maps;
    let eps = a.decomposition.params.epsilon;
    if maps.len() != 2 {
        return outcome(false, format!("expected 2 maps, got {}", maps.len()));
    }
    let mut min = f64::INFINITY;
    for u in maps[0].assigned_nodes() {
        for v in maps[1].assigned_nodes() {
            min = min.min(config_distance(maps[0].config(u).unwrap(), maps[1].config(v).unwrap()));
        }
    }
    outcome(min > eps, format!("min cross-map d_C {min:.4} vs eps {eps}"))
}

fn four_task_direction() -> Outcome {
    let s = presets::band();
    let a = build_artifact(&s).unwrap();
    let scene = s.scene();
    let tasks = presets::band_tasks();
    let plan = sequence(&tasks, &a.decomposition, &s.home_task(), &s.sequencing, &s.arm, &scene).unwrap();
    let home = Home {
        task: s.home_task(),
        config: plan.home_config.clone(),
    };
    let oracle = CostOracle::new(s.arm.clone(), scene.clone(), s.motion.clone(), home.config.clone(), s.seed);
    let hap = oracle.plan_cost(&plan);
    let naive = oracle.plan_cost(&naive_sequence(&tasks, &s.arm, &scene, &home));
    outcome(hap < naive, format!("HAP {hap:.4} vs naive {naive:.4} (ratio {:.2})", naive / hap))
}

#[allow(clippy::needless_range_loop)]
fn oracle_sandwich() -> Outcome {
    let s = presets::bench();
    let a = build_artifact(&s).unwrap();
    let scene = s.scene();
    let mut worst_gap = f64::INFINITY;
    let mut failures = Vec::new();
    for i in 0..20u64 {
        let seed = derive_seed(s.seed, 1000 + i);
        let tasks = sample_tasks(&s, 3, seed).unwrap();
        if tasks.iter().any(|t| ik_solutions(&s.arm, t, &scene).len() > 3) {
            failures.push(format!("instance {i}: more than 3 IK solutions"));
            continue;
        }
        let hap = sequence(&tasks, &a.decomposition, &s.home_task(), &s.sequencing, &s.arm, &scene).unwrap();
        let home = Home {
            task: s.home_task(),
            config: hap.home_config.clone(),
        };
        let oracle = CostOracle::new(s.arm.clone(), scene.clone(), MotionParams::default(), home.config.clone(), seed);
        let best = gtsp_bruteforce(&tasks, &s.arm, &scene, &oracle).unwrap().cost;
        let plans = [
            (Method::Hap, hap.clone()),
            (Method::HapNoPrior, hap.with_straight_seeds()),
            (Method::Naive, naive_sequence(&tasks, &s.arm, &scene, &home)),
            (Method::Robotsp, robotsp_sequence(&tasks, &s.arm, &scene, &home)),
        ];
        for (m, p) in plans {
            let c = oracle.plan_cost(&p);
            worst_gap = worst_gap.min(c - best);
            if !(best <= c + 1e-9) {
                failures.push(format!("instance {i}: {} {c:.6} < optimum {best:.6}", m.name()));
            }
        }
    }
    // exact TSP against enumeration
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut tsp_bad = 0;
    for trial in 0..60 {
        let n = 1 + trial % 8;
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let x: f64 = rng.gen_range(0.0..10.0);
                w[i][j] = x;
                w[j][i] = x;
            }
        }
        let got = tour_cost(&w, &solve_tsp(&w, 0));
        if (got - brute_tsp(&w)).abs() > 1e-9 {
            tsp_bad += 1;
        }
    }
    if tsp_bad > 0 {
        failures.push(format!("{tsp_bad} exact TSP mismatches"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("20 instances, min (method - optimum) {worst_gap:.4}; 60 TSP instances n<=8 exact")
        } else {
            failures.join("; ")
        },
    )
}

fn brute_tsp(w: &[Vec<f64>]) -> f64 {
    fn rec(w: &[Vec<f64>], order: &mut Vec<usize>, best: &mut f64) {
        if order.len() == w.len() {
            *best = best.min(tour_cost(w, order));
            return;
        }
        for j in 1..w.len() {
            if !order.contains(&j) {
                order.push(j);
                rec(w, order, best);
                order.pop();
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(w, &mut vec![0], &mut best);
    best
}

fn jerk_fidelity() -> Outcome {
    let jerk = |dt: f64| {
        let n = (1.0 / dt).round() as usize;
        let samples: Vec<Vec<f64>> = (0..=n).map(|k| vec![(k as f64 * dt).powi(5)]).collect();
        max_jerk_norm(&samples, dt)
    };
    let j = jerk(1e-3);
    let rel = (j - 60.0).abs() / 60.0;
    let change = (jerk(5e-4) - j).abs() / j;
    outcome(
        rel < 0.005 && change < 0.01,
        format!("max jerk {j:.4} vs 60 ({:.3}%), halving dt changes it by {:.3}%", rel * 100.0, change * 100.0),
    )
}

fn success_direction() -> Outcome {
    let s = presets::bench();
    let r = run_bench(&s, None).unwrap();
    let mean = |m: Method| {
        let v: Vec<f64> = r.rows.iter().filter(|x| x.method == m).map(|x| x.success_rate).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (hap, naive) = (mean(Method::Hap), mean(Method::Naive));
    outcome(
        hap >= naive,
        format!(
            "mean success HAP {hap:.3}, HAP-no-prior {:.3}, naive {naive:.3}, robotsp {:.3}",
            mean(Method::HapNoPrior),
            mean(Method::Robotsp)
        ),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("hap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scenario = dir.join("bench.json");
    hap_cli::commands::write_json(&scenario, &presets::bench()).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_hap"))
            .args(["bench", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("hap runs");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    let _ = std::fs::remove_dir_all(&dir);
    outcome(a == b && !a.is_empty(), format!("two reports of {} bytes, identical: {}", a.len(), a == b))
}

fn validity_closure() -> Outcome {
    let s = presets::bench();
    let r = run_bench(&s, None).unwrap();
    let rows = r.rows.iter().filter(|x| x.successful_legs > 0).count();
    let bad = r.rows.iter().filter(|x| !x.half_step_valid).count();
    // also the four-task plan through the full online pipeline
    let a = build_artifact(&presets::band()).unwrap();
    let rec = run_sequence(&a, &presets::band_tasks()).unwrap();
    let half = a.scenario.motion.step / 2.0;
    let scene = a.scenario.scene();
    let legs_ok = rec
        .outcomes
        .iter()
        .filter_map(|o| o.trajectory.as_ref())
        .all(|t| t.is_valid(&a.scenario.arm, &scene, half));
    outcome(
        bad == 0 && legs_ok,
        format!("{rows} bench rows with successful legs, {bad} with a half-step violation; four-task legs valid: {legs_ok}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("edge condition on every tree edge", edge_condition),
        ("N-hop bound on sampled tree paths", hop_bound),
        ("(N+1)eps bound on sampled geodesics", geodesic_bound),
        ("two maps separated by more than eps", disjointness),
        ("four-task direction check against naive", four_task_direction),
        ("exhaustive optimum lower-bounds every method", oracle_sandwich),
        ("finite-difference jerk fidelity", jerk_fidelity),
        ("success rate HAP >= naive over the sweep", success_direction),
        ("byte-identical bench reports", determinism),
        ("successful legs valid at half step", validity_closure),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
