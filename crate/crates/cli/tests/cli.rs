use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn parley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parley"))
        .args(args)
        .env_remove("PARLEY_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = parley(args);
    assert!(
        out.status.success(),
        "parley {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn gen_maps_is_deterministic() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["gen-maps", "--n", "10", "--count", "3", "--seed", "7", "--out", s(&a)]);
    ok(&["gen-maps", "--n", "10", "--count", "3", "--seed", "7", "--out", s(&b)]);
    for i in 0..3 {
        let name = format!("map_{i:03}.txt");
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
    assert_ne!(read(&a.join("map_000.txt")), read(&a.join("map_001.txt")));
}

#[test]
fn baseline_on_a_ten_by_ten_model_has_ten_constant_rows() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(&["gen-maps", "--n", "10", "--count", "1", "--seed", "2", "--out", s(d)]);
    let model = d.join("aug.prism");
    ok(&["emit", "--map", s(&d.join("map_000.txt")), "--augmented", "--out", s(&model)]);
    let front = d.join("base.csv");
    ok(&["baseline", "--model", s(&model), "--out", s(&front)]);
    let csv = read(&front);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "policy_id,success,cost");
    assert_eq!(lines.len(), 11);
    let json: serde_json::Value = serde_json::from_str(&read(&front.with_extension("json"))).unwrap();
    let points = json["points"].as_array().unwrap();
    assert_eq!(points.len(), 10);
    for (k, p) in points.iter().enumerate() {
        let genes = p["policy"].as_array().unwrap();
        assert_eq!(genes.len(), 100);
        assert!(genes.iter().all(|g| g.as_i64() == Some(k as i64 + 1)));
    }
}

#[test]
fn scale_reports_symbolic_search_spaces() {
    let out = ok(&["scale"]);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let ten = rows.iter().find(|r| r[0] == "10").unwrap();
    assert_eq!(ten[1], "100");
    assert_eq!(ten[3], "10^100");
    assert_eq!(ten[4], "1e100");
    let powers: Vec<&str> = rows.iter().map(|r| r[3]).collect();
    assert_eq!(powers, ["5^25", "10^100", "15^225", "20^400"]);
}

#[test]
fn augmented_model_under_the_uniform_policy_matches_the_original() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(&["gen-maps", "--n", "5", "--count", "1", "--seed", "11", "--out", s(d)]);
    let map = d.join("map_000.txt");
    let plain = d.join("plain.prism");
    let aug = d.join("aug.prism");
    ok(&["emit", "--map", s(&map), "--period", "3", "--out", s(&plain)]);
    ok(&["augment", "--model", s(&plain), "--preset", "robot", "--out", s(&aug)]);
    let props = ["--property", "P=? [F \"goal\"]", "--property", "R{\"cost\"}=? [F \"done\"]"];
    let a: Vec<&str> = ["check", "--model", s(&plain)].into_iter().chain(props).collect();
    let b: Vec<&str> = ["check", "--model", s(&aug), "--uniform", "3"].into_iter().chain(props).collect();
    let values = |text: String| -> Vec<f64> {
        text.lines().map(|l| l.rsplit(" = ").next().unwrap().parse().unwrap()).collect()
    };
    let (x, y) = (values(ok(&a)), values(ok(&b)));
    assert_eq!(x.len(), 2);
    for (p, q) in x.iter().zip(&y) {
        assert!((p - q).abs() <= 1e-9, "{p} vs {q}");
    }
}

#[test]
fn artifacts_reload_through_the_other_subcommands() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(&["gen-maps", "--n", "5", "--count", "1", "--seed", "4", "--out", s(d)]);
    let model = d.join("aug.prism");
    ok(&["emit", "--map", s(&d.join("map_000.txt")), "--augmented", "--out", s(&model)]);
    let base = d.join("base.csv");
    let run = d.join("run.csv");
    ok(&["baseline", "--model", s(&model), "--out", s(&base)]);
    ok(&["synth", "--model", s(&model), "--population", "12", "--generations", "4", "--seed", "1", "--out", s(&run)]);

    let metrics = d.join("metrics.csv");
    ok(&["metrics", "--parley", s(&run), "--baseline", s(&base), "--out", s(&metrics)]);
    let m = read(&metrics);
    assert!(m.starts_with("map_id,setting,run,hv_parley"));
    assert_eq!(m.lines().count(), 1 + 9);
    assert!(d.join("metrics.json").exists());

    let chosen = d.join("chosen.json");
    ok(&["select", "--front", s(&run), "--knee", "--out", s(&chosen)]);
    let sel: serde_json::Value = serde_json::from_str(&read(&chosen)).unwrap();
    let success = sel["objectives"]["success"].as_f64().unwrap();
    let checked = ok(&["check", "--model", s(&model), "--policy", s(&chosen), "--property", "P=? [F \"goal\"]"]);
    let value: f64 = checked.trim().rsplit(" = ").next().unwrap().parse().unwrap();
    assert!((value - success).abs() < 1e-12);

    // CSV alone still carries the objective values.
    std::fs::remove_file(run.with_extension("json")).unwrap();
    let svg = ok(&["plot", "--front", s(&run), "--baseline", s(&base), "--min-success", "0.8", "--max-cost", "100"]);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("stroke-dasharray").count(), 2);
    let out = parley(&["select", "--front", s(&run), "--knee"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_of_an_empty_front() {
    let dir = tempdir().unwrap();
    let f = dir.path().join("empty.csv");
    std::fs::write(&f, "policy_id,success,cost\n").unwrap();
    let svg = ok(&["plot", "--front", s(&f)]);
    assert!(svg.contains("class=\"axes\""));
    assert!(!svg.contains("<circle"));
    std::fs::write(&f, "policy_id,success,cost\n0,0.9\n").unwrap();
    assert_eq!(parley(&["plot", "--front", s(&f)]).status.code(), Some(2));
}

#[test]
fn tiny_experiment_is_reproducible() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
maps = 1
size = 4
runs = 1
[ga]
population = 8
generations = 3
[[settings]]
min_success = 0.6
max_cost = 100
"#,
    )
    .unwrap();
    let (a, b) = (d.join("a"), d.join("b"));
    ok(&["experiment", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["experiment", "--config", s(&cfg), "--out", s(&b)]);
    let rows = read(&a.join("indicators.csv"));
    assert_eq!(rows.lines().count(), 2);
    for f in ["indicators.csv", "summary.csv", "report.json", "fronts/map_000_run_0.csv", "maps/map_000.txt"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs");
    }
    // The written configuration drives an identical rerun.
    let c = d.join("c");
    ok(&["experiment", "--config", s(&a.join("config.toml")), "--out", s(&c)]);
    assert_eq!(read(&a.join("indicators.csv")), read(&c.join("indicators.csv")));
    // Maps written by the experiment load in `emit`.
    ok(&["emit", "--map", s(&a.join("maps/map_000.txt"))]);
}

#[test]
fn exit_codes() {
    assert_eq!(parley(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(parley(&["check", "--model", "x.prism"]).status.code(), Some(1));
    assert_eq!(
        parley(&["check", "--model", "/nonexistent/x.prism", "--property", "P=? [F \"goal\"]"]).status.code(),
        Some(2)
    );
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.prism");
    std::fs::write(&bad, "dtmc\nmodule M x : [0..1] init 0; [] x=0 -> (x'=floor(1)); endmodule\n").unwrap();
    assert_eq!(
        parley(&["check", "--model", s(&bad), "--property", "P=? [F \"goal\"]"]).status.code(),
        Some(2)
    );
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "runs = 0\n").unwrap();
    assert_eq!(parley(&["experiment", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn webapp_model_emits_and_augments() {
    let dir = tempdir().unwrap();
    let m = dir.path().join("web.prism");
    ok(&["emit-webapp", "--augmented", "--out", s(&m)]);
    let text = read(&m);
    assert!(text.contains("module Uncertainty_Reduction_Controller"));
    let b = dir.path().join("b.csv");
    ok(&["baseline", "--model", s(&m), "--objectives", "webapp", "--out", s(&b)]);
    assert!(read(&b).starts_with("policy_id,breach,action\n"));
}
