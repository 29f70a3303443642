use parley_core::indicators::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn hypervolume_matches_monte_carlo_area() {
    let pts = [(0.9, 80.0), (0.7, 50.0)];
    let reference = (0.6, 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = 1_000_000;
    let inside = (0..samples)
        .filter(|_| {
            let s = rng.random_range(0.6..1.0);
            let c = rng.random_range(0.0..100.0);
            pts.iter().any(|&(ps, pc)| s <= ps && c >= pc)
        })
        .count();
    let estimate = inside as f64 / samples as f64 * 0.4 * 100.0;
    let hv = hypervolume_2d(&pts, reference);
    assert!((hv - 9.0).abs() < 1e-12);
    assert!((estimate - hv).abs() <= 0.01 * hv, "{estimate}");
}

/// Exact one-sided p by enumerating every split of the pooled sample.
fn brute_force_p_less(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = all.len();
    let u_of = |mask: u32| {
        let (x, y): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mask >> i & 1 == 1);
        let mut u = 0.0;
        for &i in &x {
            for &j in &y {
                u += if all[i] < all[j] { 0.0 } else if all[i] == all[j] { 0.5 } else { 1.0 };
            }
        }
        u
    };
    let observed = u_of((1u32 << a.len()) - 1);
    let masks: Vec<u32> = (0..1u32 << n).filter(|m| m.count_ones() as usize == a.len()).collect();
    masks.iter().filter(|&&m| u_of(m) <= observed + 1e-9).count() as f64 / masks.len() as f64
}

#[test]
fn exact_test_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let a: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..6) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..6) as f64).collect();
        let r = mann_whitney_exact(&a, &b).unwrap();
        assert!((r.p_less - brute_force_p_less(&a, &b)).abs() < 1e-12, "{a:?} {b:?}");
    }
}

#[test]
fn large_samples_use_the_normal_approximation() {
    let a: Vec<f64> = (0..30).map(f64::from).collect();
    let b: Vec<f64> = (15..45).map(f64::from).collect();
    let r = mann_whitney_u(&a, &b).unwrap();
    assert!(!r.exact);
    assert!(r.p_less < 0.01);
    assert_eq!(mann_whitney_u(&[1.0; 30], &[1.0; 30]).unwrap().p_two_sided, 1.0);
}

fn front() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.6f64..1.0, 0.0f64..100.0), 0..12)
}

proptest! {
    #[test]
    fn hypervolume_is_monotone(pts in front(), extra in (0.6f64..1.0, 0.0f64..100.0)) {
        let reference = (0.6, 100.0);
        let base = hypervolume_2d(&pts, reference);
        let mut more = pts.clone();
        more.push(extra);
        let grown = hypervolume_2d(&more, reference);
        prop_assert!(grown >= base - 1e-9);
        if pts.iter().any(|&(s, c)| s >= extra.0 && c <= extra.1) {
            prop_assert!((grown - base).abs() < 1e-9);
        }
        for k in 0..pts.len() {
            let mut sub = pts.clone();
            sub.remove(k);
            prop_assert!(hypervolume_2d(&sub, reference) <= base + 1e-9);
        }
    }

    #[test]
    fn spread_is_scale_and_order_invariant(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..100.0), 3..10), factor in 0.5f64..20.0) {
        prop_assume!(pts.iter().any(|p| *p != pts[0]));
        let sp = spread(&pts).unwrap().value;
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(s, c)| (s, c * factor)).collect();
        prop_assert!((spread(&scaled).unwrap().value - sp).abs() < 1e-9);
        let mut rev = pts.clone();
        rev.reverse();
        prop_assert!((spread(&rev).unwrap().value - sp).abs() < 1e-9);
    }

    #[test]
    fn exact_and_normal_p_agree(a in prop::collection::vec(0.0f64..1.0, 10), b in prop::collection::vec(0.0f64..1.0, 10)) {
        let e = mann_whitney_exact(&a, &b).unwrap();
        let n = mann_whitney_normal(&a, &b).unwrap();
        prop_assert_eq!(e.u, n.u);
        prop_assert!((e.p_two_sided - n.p_two_sided).abs() <= 0.01, "{} vs {}", e.p_two_sided, n.p_two_sided);
    }

    #[test]
    fn swapping_samples_reflects_u(a in prop::collection::vec(0u8..5, 1..8), b in prop::collection::vec(0u8..5, 1..8)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
        prop_assert!((ab.p_less - ba.p_greater).abs() < 1e-9);
    }
}
