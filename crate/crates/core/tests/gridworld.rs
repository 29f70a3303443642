use std::collections::BTreeMap;

use parley_core::augment::{augment, enumerate_params, instantiate, Policy};
use parley_core::gridworld::*;
use parley_core::mc::{build, check, BuildOptions, Property};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn objectives(m: &parley_prism::Model) -> (f64, f64) {
    let d = build(m, &BuildOptions::default()).unwrap();
    (
        check(&d, &Property::reach("goal")).unwrap(),
        check(&d, &Property::reward("cost", "done")).unwrap(),
    )
}

fn cfg(n: usize, p: f64) -> RobotModelCfg {
    RobotModelCfg { p, ..RobotModelCfg::for_size(n) }
}

#[test]
fn deterministic_motion_cost_has_closed_form() {
    for n in 3..=6usize {
        let map = GridMap::empty(n);
        let ctl = dijkstra_controller(&map, DEFAULT_OBSTACLE_PENALTY);
        let m = emit_model(&map, &ctl, &cfg(n, 0.0)).unwrap();
        let aug = augment(&m, &robot_augment_spec(n as i64)).unwrap();
        let params = enumerate_params(&aug).unwrap();
        let len = 2 * (n - 1);
        for c in 1..=n {
            let inst = instantiate(&aug, &Policy::uniform(params.len(), c as i64)).unwrap();
            let (succ, cost) = objectives(&inst);
            let expected = len as f64 + 5.0 * (len / c) as f64;
            assert_eq!(succ, 1.0, "n={n} c={c}");
            assert!((cost - expected).abs() < 1e-9, "n={n} c={c}: {cost} vs {expected}");
        }
    }
}

#[test]
fn obstacle_density_matches_normal_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cells = draw_obstacles(&mut rng, 100_000, 1.0);
    let density = cells.iter().filter(|&&o| o).count() as f64 / cells.len() as f64;
    let expected = 2.0 * Normal::standard().cdf(-1.0);
    assert!((expected - 0.3173).abs() < 1e-4);
    assert!((density - expected).abs() <= 0.01, "{density}");
}

/// Least weighted cost over all simple paths, by exhaustive enumeration.
fn brute_force(map: &GridMap, penalty: f64) -> BTreeMap<Cell, f64> {
    fn dfs(map: &GridMap, c: Cell, seen: &mut Vec<Cell>, acc: f64, penalty: f64, best: &mut f64) {
        if c == map.destination {
            *best = best.min(acc);
            return;
        }
        for nb in map.neighbours4(c) {
            if !map.is_obstacle(nb) && !seen.contains(&nb) {
                seen.push(nb);
                dfs(map, nb, seen, acc + step_cost(map, nb, penalty), penalty, best);
                seen.pop();
            }
        }
    }
    map.free_cells()
        .filter_map(|c| {
            let mut best = f64::INFINITY;
            dfs(map, c, &mut vec![c], 0.0, penalty, &mut best);
            best.is_finite().then_some((c, best))
        })
        .collect()
}

#[test]
fn dijkstra_agrees_with_path_enumeration() {
    // A single obstacle in the middle: both corridors have length 8 but only
    // the outer ones avoid every neighbour of the obstacle.
    let map = GridMap::new(5, &[(2, 2)], (0, 0), (4, 4)).unwrap();
    let ctl = dijkstra_controller(&map, 2.0);
    let oracle = brute_force(&map, 2.0);
    for (c, &cost) in &oracle {
        assert!((ctl.cost[c] - cost).abs() < 1e-12, "{c:?}");
    }
    let path = ctl.path(&map);
    assert_eq!(path.len() - 1, 8);
    let weighted: f64 = path[1..].iter().map(|&c| step_cost(&map, c, 2.0)).sum();
    assert!((weighted - oracle[&map.start]).abs() < 1e-12);
    assert!(path.iter().all(|&c| c == map.start || c == map.destination || !map.near_obstacle(c)));

    for seed in 0..5 {
        let map = generate_map(5, seed, 1.0).unwrap();
        let ctl = dijkstra_controller(&map, 2.0);
        let oracle = brute_force(&map, 2.0);
        assert_eq!(ctl.cost.len(), oracle.len());
        for (c, &cost) in &oracle {
            assert!((ctl.cost[c] - cost).abs() < 1e-12);
        }
        assert_eq!(*ctl.path(&map).last().unwrap(), map.destination);
    }
}

#[test]
fn east_move_from_corner_merges_clamped_branches() {
    let map = GridMap::empty(3);
    let ctl = dijkstra_controller(&map, 2.0);
    assert_eq!(ctl.get((0, 0)), Some(Move::East));
    let m = emit_model(&map, &ctl, &cfg(3, 0.01)).unwrap();
    let d = build(&m, &BuildOptions::default()).unwrap();
    let s0 = d.initial as usize;
    assert_eq!(d.action(s0), Some("east"));
    let mut dist: Vec<((i64, i64), f64)> = d
        .row(s0)
        .map(|(t, p)| ((d.value(t, "x").unwrap(), d.value(t, "y").unwrap()), p))
        .collect();
    dist.sort_by(|a, b| a.0.cmp(&b.0));
    let expected = [((0, 0), 0.02), ((0, 1), 0.01), ((1, 0), 0.97)];
    assert_eq!(dist.len(), 3);
    for (got, want) in dist.iter().zip(expected) {
        assert_eq!(got.0, want.0);
        assert!((got.1 - want.1).abs() < 1e-12);
    }
}

#[test]
fn crash_probability_grows_with_drift() {
    for seed in 0..5 {
        let map = generate_map(6, seed, 1.0).unwrap();
        let ctl = dijkstra_controller(&map, 2.0);
        let crash: Vec<f64> = [0.0, 0.01, 0.05]
            .iter()
            .map(|&p| {
                let d = build(&emit_model(&map, &ctl, &cfg(6, p)).unwrap(), &BuildOptions::default()).unwrap();
                check(&d, &Property::reach("crash")).unwrap()
            })
            .collect();
        assert_eq!(crash[0], 0.0);
        assert!(crash.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{crash:?}");
    }
}

#[test]
fn controller_covers_connected_cells() {
    for seed in 0..10 {
        let map = generate_map(8, seed, 1.0).unwrap();
        let ctl = dijkstra_controller(&map, 2.0);
        for c in map.free_cells().filter(|&c| c != map.destination) {
            if ctl.cost.contains_key(&c) {
                let next = ctl.get(c).unwrap().apply(c, map.size).unwrap();
                assert!(!map.is_obstacle(next));
                assert!(ctl.cost[&next] < ctl.cost[&c]);
            }
        }
        assert_eq!(*ctl.path(&map).last().unwrap(), map.destination);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn emitted_models_are_well_formed(seed in 0u64..1000, n in 3usize..8, p in 0.0f64..0.2) {
        let map = generate_map(n, seed, 1.0).unwrap();
        let ctl = dijkstra_controller(&map, 2.0);
        let m = emit_model(&map, &ctl, &cfg(n, p)).unwrap();
        prop_assert!(parley_prism::typecheck(&m).is_empty(), "{:?}", parley_prism::typecheck(&m));
        prop_assert!(build(&m, &BuildOptions::default()).is_ok());
    }

    #[test]
    fn certain_motion_always_succeeds(policy in prop::collection::vec(1i64..=4, 16)) {
        let map = GridMap::empty(4);
        let ctl = dijkstra_controller(&map, 2.0);
        let aug = augment(&emit_model(&map, &ctl, &cfg(4, 0.0)).unwrap(), &robot_augment_spec(4)).unwrap();
        let (succ, _) = objectives(&instantiate(&aug, &Policy(policy)).unwrap());
        prop_assert_eq!(succ, 1.0);
    }
}
