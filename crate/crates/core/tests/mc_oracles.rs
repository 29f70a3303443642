use parley_core::mc::{
    expected_reward_vector, import, prob_reach, prob_reach_vector, simulate, walk, ExplicitDtmc, SolverOptions,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn dense_rows(d: &ExplicitDtmc) -> Vec<Vec<f64>> {
    let n = d.num_states();
    (0..n)
        .map(|s| {
            let mut r = vec![0.0; n];
            for (t, p) in d.row(s) {
                r[t] += p;
            }
            r
        })
        .collect()
}

/// Reachability probabilities from the linear system restricted to states
/// that can reach the target.
fn reach_oracle(d: &ExplicitDtmc, target: &[bool]) -> Vec<f64> {
    let n = d.num_states();
    let p = dense_rows(d);
    let mut can = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && (0..n).any(|t| p[s][t] > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !target[s]).collect();
    let a = unknown
        .iter()
        .map(|&s| unknown.iter().map(|&t| if s == t { 1.0 } else { 0.0 } - p[s][t]).collect())
        .collect();
    let b = unknown.iter().map(|&s| (0..n).filter(|&t| target[t]).map(|t| p[s][t]).sum()).collect();
    let sol = solve_dense(a, b);
    let mut x: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for (i, &s) in unknown.iter().enumerate() {
        x[s] = sol[i];
    }
    x
}

fn chain_text(n: usize, rows: &[Vec<(usize, u32)>], targets: &[usize], rewards: &[u32]) -> String {
    let mut text = format!("STATES {n} INITIAL 0\n");
    for (s, row) in rows.iter().enumerate() {
        let total: u32 = row.iter().map(|(_, w)| w).sum();
        let mut merged: Vec<(usize, u32)> = Vec::new();
        for &(t, w) in row {
            match merged.iter_mut().find(|(x, _)| *x == t) {
                Some((_, v)) => *v += w,
                None => merged.push((t, w)),
            }
        }
        for (t, w) in merged {
            text.push_str(&format!("{s} {t} {}\n", w as f64 / total as f64));
        }
    }
    text.push_str("LABEL goal:");
    for t in targets {
        text.push_str(&format!(" {t}"));
    }
    text.push_str("\nREWARD cost:");
    for (s, r) in rewards.iter().enumerate() {
        text.push_str(&format!(" {s}={r}"));
    }
    text.push('\n');
    text
}

fn random_chain() -> impl Strategy<Value = (usize, Vec<Vec<(usize, u32)>>, Vec<usize>)> {
    (2usize..=50).prop_flat_map(|n| {
        let row = prop::collection::vec((0..n, 1u32..10), 1..5);
        (Just(n), prop::collection::vec(row, n), prop::collection::vec(0..n, 1..4))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_iteration_matches_linear_solve((n, rows, targets) in random_chain()) {
        let d = import(&chain_text(n, &rows, &targets, &vec![0; n])).unwrap();
        let target = d.label("goal").unwrap().to_vec();
        let vi = prob_reach_vector(&d, &target, &SolverOptions { eps: 1e-12, ..Default::default() }).unwrap();
        let exact = reach_oracle(&d, &target);
        for s in 0..n {
            prop_assert!((vi[s] - exact[s]).abs() <= 1e-7, "state {s}: {} vs {}", vi[s], exact[s]);
        }
    }

    /// Chains whose every non-final state moves to a later state with
    /// positive probability reach the last state almost surely.
    #[test]
    fn expected_reward_matches_linear_solve(
        (n, rows) in (2usize..=40).prop_flat_map(|n| {
            let row = (0..n).prop_flat_map(move |_| prop::collection::vec((0..n, 1u32..10), 0..4));
            (Just(n), prop::collection::vec(row, n))
        }),
        rewards in prop::collection::vec(0u32..20, 40),
    ) {
        let mut rows = rows;
        for (s, row) in rows.iter_mut().enumerate().take(n - 1) {
            row.push((s + 1, 1));
        }
        rows[n - 1] = vec![(n - 1, 1)];
        let d = import(&chain_text(n, &rows, &[n - 1], &rewards[..n])).unwrap();
        let target = d.label("goal").unwrap().to_vec();
        let vi = expected_reward_vector(&d, d.reward("cost").unwrap(), &target, &SolverOptions { eps: 1e-12, ..Default::default() }).unwrap();
        let p = dense_rows(&d);
        let m = n - 1;
        let a = (0..m).map(|s| (0..m).map(|t| if s == t { 1.0 } else { 0.0 } - p[s][t]).collect()).collect();
        let exact = solve_dense(a, rewards[..m].iter().map(|&r| r as f64).collect());
        for s in 0..m {
            prop_assert!((vi[s] - exact[s]).abs() <= 1e-7 * exact[s].max(1.0), "state {s}: {} vs {}", vi[s], exact[s]);
        }
    }

    #[test]
    fn extra_edge_into_target_never_lowers_reachability((n, rows, targets) in random_chain(), from in 0usize..50) {
        let d = import(&chain_text(n, &rows, &targets, &vec![0; n])).unwrap();
        let target = d.label("goal").unwrap().to_vec();
        let before = prob_reach_vector(&d, &target, &SolverOptions::default()).unwrap();
        let from = from % n;
        prop_assume!(before[from] == 0.0);
        let mut rows = rows;
        rows[from].push((targets[0], 1));
        let d2 = import(&chain_text(n, &rows, &targets, &vec![0; n])).unwrap();
        let after = prob_reach(&d2, "goal", &SolverOptions::default()).unwrap();
        prop_assert!(after >= before[0] - 1e-8);
    }
}

#[test]
fn geometric_series_matches_simulation() {
    let d = import("STATES 2 INITIAL 0\n0 1 0.5 go\n0 0 0.5 go\n1 1 1\nLABEL goal: 1\nREWARD cost: 0=1\n").unwrap();
    let p = prob_reach(&d, "goal", &SolverOptions::default()).unwrap();
    assert!((p - 1.0).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let runs = 100_000;
    let mut reached = 0usize;
    let mut steps = 0usize;
    for _ in 0..runs {
        let trace = walk(&d, &mut rng, 1_000_000, |s| s == 1);
        reached += (trace.last().unwrap().state == 1) as usize;
        steps += trace.len() - 1;
    }
    assert_eq!(reached, runs);
    // Mean of a geometric distribution with success probability 1/2 is 2.
    let mean = steps as f64 / runs as f64;
    let se = (2.0f64 / runs as f64).sqrt();
    assert!((mean - 2.0).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn trap_chain_simulated_success_rate() {
    let d = import("STATES 3 INITIAL 0\n0 1 0.5 go\n0 2 0.5 go\n1 1 1\n2 2 1\nLABEL goal: 1\n").unwrap();
    let runs = 100_000u64;
    let hits = (0..runs)
        .filter(|&seed| simulate(&d, seed, 10).last().unwrap().state == 1)
        .count() as f64;
    let sd = (0.25 * runs as f64).sqrt();
    assert!((hits - 0.5 * runs as f64).abs() <= 3.0 * sd, "{hits}");
}
