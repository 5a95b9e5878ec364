//! Closed-tour TSP over a dense symmetric weight matrix.

/// Largest instance solved exactly.
pub const EXACT_TSP_LIMIT: usize = 13;

/// Length of the closed tour visiting `order` and returning to `order[0]`.
pub fn tour_cost(weights: &[Vec<f64>], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let mut c: f64 = order.windows(2).map(|w| weights[w[0]][w[1]]).sum();
    c += weights[*order.last().unwrap()][order[0]];
    c
}

/// Closed tour over every index of `weights`, starting at `anchor`.
/// Exact (Held–Karp) up to [`EXACT_TSP_LIMIT`] nodes, otherwise nearest
/// neighbour followed by 2-opt.
pub fn solve_tsp(weights: &[Vec<f64>], anchor: usize) -> Vec<usize> {
    let n = weights.len();
    assert!(anchor < n, "anchor out of range");
    assert!(weights.iter().all(|r| r.len() == n), "weight matrix must be square");
    if n <= 3 {
        let mut order = vec![anchor];
        order.extend((0..n).filter(|&i| i != anchor));
        return order;
    }
    if n <= EXACT_TSP_LIMIT {
        held_karp(weights, anchor)
    } else {
        let mut order = nearest_neighbour(weights, anchor);
        two_opt(weights, &mut order);
        order
    }
}

fn held_karp(w: &[Vec<f64>], anchor: usize) -> Vec<usize> {
    let others: Vec<usize> = (0..w.len()).filter(|&i| i != anchor).collect();
    let m = others.len();
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = w[anchor][others[j]];
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * m + j];
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = cur + w[others[j]][others[k]];
                if c < dp[next * m + k] {
                    dp[next * m + k] = c;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = (0, f64::INFINITY);
    for j in 0..m {
        let c = dp[last_mask * m + j] + w[others[j]][anchor];
        if c < best.1 {
            best = (j, c);
        }
    }
    let mut rev = Vec::with_capacity(m);
    let (mut mask, mut j) = (last_mask, best.0);
    loop {
        rev.push(others[j]);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    let mut order = vec![anchor];
    order.extend(rev.into_iter().rev());
    order
}

fn nearest_neighbour(w: &[Vec<f64>], anchor: usize) -> Vec<usize> {
    let n = w.len();
    let mut used = vec![false; n];
    used[anchor] = true;
    let mut order = vec![anchor];
    while order.len() < n {
        let cur = *order.last().unwrap();
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, &u) in used.iter().enumerate() {
            if !u && (best.0 == usize::MAX || w[cur][j] < best.1) {
                best = (j, w[cur][j]);
            }
        }
        used[best.0] = true;
        order.push(best.0);
    }
    order
}

fn two_opt(w: &[Vec<f64>], order: &mut [usize]) {
    let n = order.len();
    let cap = 10 * n * n;
    let mut moves = 0;
    'outer: while moves < cap {
        for i in 1..n - 1 {
            for j in i + 1..n {
                let (a, b) = (order[i - 1], order[i]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                let delta = w[a][c] + w[b][d] - w[a][b] - w[c][d];
                if delta < -1e-12 {
                    order[i..=j].reverse();
                    moves += 1;
                    continue 'outer;
                }
            }
        }
        break;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(w: &[Vec<f64>], anchor: usize) -> f64 {
        fn rec(w: &[Vec<f64>], order: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut f64) {
            if order.len() == w.len() {
                *best = best.min(tour_cost(w, order));
                return;
            }
            for j in 0..w.len() {
                if !used[j] {
                    used[j] = true;
                    order.push(j);
                    rec(w, order, used, best);
                    order.pop();
                    used[j] = false;
                }
            }
        }
        let mut used = vec![false; w.len()];
        used[anchor] = true;
        let mut best = f64::INFINITY;
        rec(w, &mut vec![anchor], &mut used, &mut best);
        best
    }

    fn euclidean(pts: &[(f64, f64)]) -> Vec<Vec<f64>> {
        pts.iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect()
    }

    fn is_permutation(order: &[usize], n: usize) -> bool {
        let mut s = order.to_vec();
        s.sort_unstable();
        s == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn square_tour() {
        let w = euclidean(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        let order = solve_tsp(&w, 0);
        assert!((tour_cost(&w, &order) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_instances() {
        assert_eq!(solve_tsp(&[vec![0.0]], 0), vec![0]);
        assert_eq!(solve_tsp(&euclidean(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]), 2), vec![2, 0, 1]);
    }

    #[test]
    fn heuristic_on_circle_is_optimal() {
        let n = 20;
        let pts: Vec<_> = (0..n)
            .map(|i| {
                let a = (i * 7 % n) as f64 / n as f64 * std::f64::consts::TAU;
                (a.cos(), a.sin())
            })
            .collect();
        let w = euclidean(&pts);
        let order = solve_tsp(&w, 3);
        assert_eq!(order[0], 3);
        assert!(is_permutation(&order, n));
        let perimeter = n as f64 * 2.0 * (std::f64::consts::PI / n as f64).sin();
        assert!((tour_cost(&w, &order) - perimeter).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(
            pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8),
            anchor_seed in 0usize..8,
        ) {
            let w = euclidean(&pts);
            let anchor = anchor_seed % pts.len();
            let order = solve_tsp(&w, anchor);
            prop_assert_eq!(order[0], anchor);
            prop_assert!(is_permutation(&order, pts.len()));
            prop_assert!((tour_cost(&w, &order) - brute_force(&w, anchor)).abs() < 1e-9);
        }

        #[test]
        fn heuristic_is_valid_and_not_worse_than_nn(
            pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 14..30),
        ) {
            let w = euclidean(&pts);
            let order = solve_tsp(&w, 0);
            prop_assert!(is_permutation(&order, pts.len()));
            prop_assert!(tour_cost(&w, &order) <= tour_cost(&w, &nearest_neighbour(&w, 0)) + 1e-9);
        }
    }
}
