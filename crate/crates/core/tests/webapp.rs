use parley_core::augment::{augment, Policy};
use parley_core::mc::{build, check, BuildOptions};
use parley_core::synthesis::*;
use parley_core::webapp::*;

fn reduced() -> WebAppCfg {
    WebAppCfg {
        horizon: 6,
        cost_levels: 2,
        confidence_levels: 2,
        alarm_threshold: 1,
        scan_threshold: 1,
        ..Default::default()
    }
}

fn evaluator(cfg: &WebAppCfg) -> Evaluator {
    let m = emit_webapp_model(cfg).unwrap();
    let aug = augment(&m, &webapp_augment_spec(cfg)).unwrap();
    Evaluator::new(&aug, webapp_objectives()).unwrap()
}

#[test]
fn default_model_scale() {
    let cfg = WebAppCfg::default();
    assert_eq!(evaluator(&cfg).params().len(), 132);
    let d = build(&emit_webapp_model(&cfg).unwrap(), &BuildOptions::default()).unwrap();
    assert!((1_000..=30_000).contains(&d.num_states()), "{}", d.num_states());
    let again = build(&emit_webapp_model(&cfg).unwrap(), &BuildOptions::default()).unwrap();
    assert_eq!(d.num_states(), again.num_states());
    assert_eq!(d.num_transitions(), again.num_transitions());
}

#[test]
fn always_scanning_minimises_breach() {
    let eval = evaluator(&reduced());
    assert_eq!(eval.params().len(), 4);
    let front = exhaustive(&eval, EXHAUSTIVE_CAP).unwrap();
    assert_eq!(eval.evaluations(), 81);
    let always = eval.evaluate(&Policy::uniform(4, 0)).unwrap();
    let best = (0..81u32)
        .map(|i| Policy((0..4).map(|k| ((i / 3u32.pow(k)) % 3) as i64).collect()))
        .map(|p| eval.evaluate(&p).unwrap().objectives[0])
        .fold(f64::INFINITY, f64::min);
    assert!((always.objectives[0] - best).abs() < 1e-12, "{} vs {best}", always.objectives[0]);
    assert!(front.points.iter().any(|p| (p.objectives[0] - best).abs() < 1e-12));
}

#[test]
fn perfect_detector_without_scans_pays_only_true_restores() {
    let cfg = WebAppCfg {
        true_positive: Some(vec![0.0, 0.0, 1.0]),
        false_positive: Some(vec![1.0, 0.0, 0.0]),
        confidence_levels: 3,
        alarm_threshold: 2,
        scan_threshold: 3,
        stale_noise: 0.0,
        ..reduced()
    };
    let m = emit_webapp_model(&cfg).unwrap();
    let d = build(&m, &BuildOptions::default()).unwrap();
    let action = check(&d, &webapp_objectives()[1].property).unwrap();
    let breach = check(&d, &webapp_objectives()[0].property).unwrap();
    // A is restored in the step it is infiltrated, so B is never reached
    // and every step restores A with probability `attack_success` at the
    // cost level of the following hour.
    let expected: f64 = (0..cfg.horizon)
        .map(|t| cfg.attack_success * cfg.restore_a_cost * (cfg.level_at(t + 1) + 1) as f64)
        .sum();
    assert!((action - expected).abs() < 1e-9, "{action} vs {expected}");
    assert_eq!(breach, 0.0);
}

#[test]
fn larger_breach_penalty_never_lowers_breach_axis() {
    let fronts: Vec<Vec<f64>> = [10.0, 20.0, 40.0]
        .into_iter()
        .map(|penalty| {
            let eval = evaluator(&WebAppCfg { breach_penalty: penalty, ..reduced() });
            let mut v: Vec<f64> = exhaustive(&eval, EXHAUSTIVE_CAP)
                .unwrap()
                .points
                .iter()
                .map(|p| p.objectives[0])
                .collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    for w in fronts.windows(2) {
        assert_eq!(w[0].len(), w[1].len());
        assert!(w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
    }
}
