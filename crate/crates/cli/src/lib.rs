//! The `parley` command line: map generation, model emission, augmentation,
//! checking, synthesis, indicators, experiments and plots.

pub mod config;
pub mod error;
pub mod io;
pub mod plot;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parley_core::augment::{augment, enumerate_params, instantiate, AugmentSpec, Policy};
use parley_core::experiment::{
    indicator_rows, run_experiment, scale_row, ExperimentReport, ScaleRow, SCALE_HEADER,
};
use parley_core::gridworld::{
    dijkstra_controller, emit_model, estimate_transitions_from_traces, generate_map, parse_traces,
    robot_augment_spec, robot_objectives, GridMap, RobotModelCfg, DEFAULT_OBSTACLE_PENALTY, DEFAULT_SIGMA,
};
use parley_core::indicators::{filter_points, knee_point, success_cost, RequirementSetting};
use parley_core::mc::{build, check, export, BuildOptions, Objective, Property};
use parley_core::synthesis::{
    baseline_policies, exhaustive, nsga2, EvalCache, Evaluator, ParetoFront, EXHAUSTIVE_CAP,
};
use parley_core::webapp::{emit_webapp_model, webapp_augment_spec, webapp_objectives};
use parley_prism::{bind_constants, print, Model, Value};
use serde::{Deserialize, Serialize};

use crate::config::{load_config, to_toml, HarnessConfig, Preset};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};
use crate::io::{emit, read_model, read_policies, read_text, write_json, write_policies, write_table, write_text, PolicySet};
use crate::plot::{Marker, Series};

#[derive(Debug, Parser)]
#[command(name = "parley", version, about = "Synthesis of uncertainty-reduction controllers for DTMC models")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads.
    #[arg(long, global = true, env = "PARLEY_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate random solvable maps.
    GenMaps(GenMapsArgs),
    /// Emit the robot model of a map.
    Emit(EmitArgs),
    /// Emit the web-application model.
    EmitWebapp(EmitWebappArgs),
    /// Estimate a model from recorded traces.
    Estimate(EstimateArgs),
    /// Add the uncertainty-reduction controller to a model.
    Augment(AugmentArgs),
    /// Check properties of a model.
    Check(CheckArgs),
    /// Evaluate the constant policies.
    Baseline(BaselineArgs),
    /// Search for Pareto-optimal policies.
    Synth(SynthArgs),
    /// Compare fronts under requirement settings.
    Metrics(MetricsArgs),
    /// Pick one policy from a front.
    Select(SelectArgs),
    /// Run the map-by-map comparison.
    Experiment(ExperimentArgs),
    /// Report model sizes and search spaces over map sizes.
    Scale(ScaleArgs),
    /// Draw fronts as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenMapsArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Map `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value = "maps")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RobotArgs {
    /// Deviation probability per unintended direction.
    #[arg(long)]
    p: Option<f64>,
    /// Localisation period of the un-augmented model.
    #[arg(long)]
    period: Option<i64>,
    /// Largest period; defaults to the map size.
    #[arg(long)]
    c_max: Option<i64>,
    #[arg(long)]
    move_cost: Option<f64>,
    #[arg(long)]
    localisation_cost: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_OBSTACLE_PENALTY)]
    penalty: f64,
}

impl RobotArgs {
    fn cfg(&self, size: usize) -> RobotModelCfg {
        let mut cfg = RobotModelCfg::for_size(size);
        if let Some(c) = self.c_max {
            cfg.c_max = c;
            cfg.period = cfg.period.min(c);
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(c) = self.period {
            cfg.period = c;
        }
        if let Some(c) = self.move_cost {
            cfg.move_cost = c;
        }
        if let Some(c) = self.localisation_cost {
            cfg.localisation_cost = c;
        }
        cfg
    }
}

#[derive(Debug, Args)]
struct EmitArgs {
    #[arg(long)]
    map: PathBuf,
    #[command(flatten)]
    robot: RobotArgs,
    /// Emit the augmented model instead.
    #[arg(long)]
    augmented: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmitWebappArgs {
    /// Configuration file; its `[webapp]` table is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    augmented: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// JSON-lines trace file.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CaseStudy {
    Robot,
    Webapp,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    model: PathBuf,
    /// TOML file describing the augmentation.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<CaseStudy>,
    /// Largest period for the robot preset.
    #[arg(long)]
    c_max: Option<i64>,
    /// Configuration file for the web-app preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PolicyArgs {
    /// JSON file holding a parameter vector.
    #[arg(long, conflicts_with = "uniform")]
    policy: Option<PathBuf>,
    /// Use this value for every decision parameter.
    #[arg(long)]
    uniform: Option<i64>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    /// For example `P=? [F "goal"]` or `R{"cost"}=? [F "done"]`.
    #[arg(long = "property", required = true)]
    properties: Vec<String>,
    /// Constant binding `NAME=VALUE`.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    consts: Vec<String>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Give deadlocked states a self-loop.
    #[arg(long)]
    permissive: bool,
    /// Also write the explicit chain.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ObjectiveArgs {
    /// `robot`, `webapp`, or a TOML file with `[[objective]]` tables.
    #[arg(long, default_value = "robot")]
    objectives: String,
}

impl ObjectiveArgs {
    fn load(&self) -> Result<Vec<Objective>, CliError> {
        #[derive(Deserialize)]
        struct File {
            objective: Vec<Objective>,
        }
        match self.objectives.as_str() {
            "robot" => Ok(robot_objectives()),
            "webapp" => Ok(webapp_objectives()),
            path => {
                let path = Path::new(path);
                let file: File =
                    toml::from_str(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                if file.objective.len() < 2 {
                    return Err(CliError::usage("need at least two objectives"));
                }
                Ok(file.objective)
            }
        }
    }
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Augmented model.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    objectives: ObjectiveArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Augmented model.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    objectives: ObjectiveArgs,
    /// Configuration file; its `[ga]` table is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate every policy instead of searching.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_setting(s: &str) -> Result<RequirementSetting, String> {
    let (a, b) = s.split_once(',').ok_or("expected MIN_SUCCESS,MAX_COST")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad success `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad cost `{b}`"))?;
    RequirementSetting::new(a, b).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Fronts of the synthesized runs.
    #[arg(long, required = true, num_args = 1..)]
    parley: Vec<PathBuf>,
    #[arg(long)]
    baseline: PathBuf,
    /// Requirement `MIN_SUCCESS,MAX_COST`; defaults to the nine-setting grid.
    #[arg(long = "setting", value_parser = parse_setting)]
    settings: Vec<RequirementSetting>,
    #[arg(long, default_value_t = 0)]
    map_id: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    front: PathBuf,
    #[arg(long)]
    min_success: Option<f64>,
    #[arg(long)]
    max_cost: Option<f64>,
    /// Pick the knee point of the (filtered) front.
    #[arg(long)]
    knee: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    maps: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    map_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    c_max: Option<i64>,
    #[arg(long = "setting", value_parser = parse_setting)]
    settings: Vec<RequirementSetting>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Synthesized fronts, drawn as circles.
    #[arg(long)]
    front: Vec<PathBuf>,
    /// Baseline front, drawn as crosses.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, requires = "max_cost")]
    min_success: Option<f64>,
    #[arg(long, requires = "min_success")]
    max_cost: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    if let Some(j) = cli.jobs {
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match dispatch(cli.command, cli.jobs) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn dispatch(command: Command, jobs: Option<usize>) -> Result<(), CliError> {
    match command {
        Command::GenMaps(a) => gen_maps(a),
        Command::Emit(a) => emit_robot(a),
        Command::EmitWebapp(a) => emit_webapp(a),
        Command::Estimate(a) => estimate(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::Baseline(a) => baseline(a),
        Command::Synth(a) => synth(a),
        Command::Metrics(a) => metrics(a),
        Command::Select(a) => select(a),
        Command::Experiment(a) => experiment(a, jobs),
        Command::Scale(a) => scale(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

pub fn map_file_name(i: usize) -> String {
    format!("map_{i:03}.txt")
}

fn gen_maps(a: GenMapsArgs) -> Result<(), CliError> {
    for i in 0..a.count {
        let map = generate_map(a.n, a.seed.wrapping_add(i as u64), a.sigma)?;
        let path = a.out.join(map_file_name(i));
        write_text(&path, &map.to_string())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn read_map(path: &Path) -> Result<GridMap, CliError> {
    read_text(path)?
        .parse()
        .map_err(|e| CliError::model(format!("{}: {e}", path.display())))
}

fn emit_robot(a: EmitArgs) -> Result<(), CliError> {
    let map = read_map(&a.map)?;
    let cfg = a.robot.cfg(map.size);
    let ctl = dijkstra_controller(&map, a.robot.penalty);
    let mut model = emit_model(&map, &ctl, &cfg)?;
    if a.augmented {
        model = augment(&model, &robot_augment_spec(cfg.c_max))?;
    }
    emit(a.out.as_deref(), &print(&model))
}

fn emit_webapp(a: EmitWebappArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref(), None)?.webapp;
    let mut model = emit_webapp_model(&cfg)?;
    if a.augmented {
        model = augment(&model, &webapp_augment_spec(&cfg))?;
    }
    emit(a.out.as_deref(), &print(&model))
}

fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let (schema, records) = parse_traces(&read_text(&a.traces)?)?;
    let table = estimate_transitions_from_traces(schema, &records)?;
    let model = table.to_model()?;
    tracing::info!(records = records.len(), cells = table.cells().count(), "estimated transitions");
    emit(a.out.as_deref(), &print(&model))
}

fn augment_cmd(a: AugmentArgs) -> Result<(), CliError> {
    let model = read_model(&a.model)?;
    let spec: AugmentSpec = match (&a.spec, a.preset) {
        (Some(path), _) => toml::from_str(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
        (None, Some(CaseStudy::Robot)) => robot_augment_spec(a.c_max.unwrap_or_else(|| robot_c_max(&model))),
        (None, Some(CaseStudy::Webapp)) => webapp_augment_spec(&load_config(a.config.as_deref(), None)?.webapp),
        (None, None) => return Err(CliError::usage("give --spec or --preset")),
    };
    let out = augment(&model, &spec)?;
    tracing::info!(params = enumerate_params(&out)?.len(), "augmented");
    emit(a.out.as_deref(), &print(&out))
}

/// Map size of an emitted robot model, read from its `N` constant.
fn robot_c_max(model: &Model) -> i64 {
    model
        .constants
        .iter()
        .find(|c| c.name == "N")
        .and_then(|c| c.value.as_ref())
        .and_then(|e| parley_prism::eval(e, &|_: &str| None).ok())
        .and_then(|v| v.as_i64())
        .map_or(10, |n| n + 1)
}

fn parse_value(s: &str) -> Result<Value, CliError> {
    match s {
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        _ => s
            .parse::<i64>()
            .map(Value::Int)
            .or_else(|_| s.parse::<f64>().map(Value::Double))
            .map_err(|_| CliError::usage(format!("`{s}` is not a number or boolean"))),
    }
}

fn read_policy(path: &Path) -> Result<Policy, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum PolicyFile {
        Bare(Vec<i64>),
        Selected { policy: Vec<i64> },
    }
    let text = read_text(path)?;
    let file: PolicyFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(Policy(match file {
        PolicyFile::Bare(v) | PolicyFile::Selected { policy: v } => v,
    }))
}

fn check_cmd(a: CheckArgs) -> Result<(), CliError> {
    let mut model = read_model(&a.model)?;
    if !a.consts.is_empty() {
        let mut bindings = BTreeMap::new();
        for c in &a.consts {
            let (name, value) = c
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("`{c}` is not NAME=VALUE")))?;
            bindings.insert(name.trim().to_string(), parse_value(value.trim())?);
        }
        model = bind_constants(&model, &bindings)?;
    }
    let policy = match (&a.policy.policy, a.policy.uniform) {
        (Some(p), _) => Some(read_policy(p)?),
        (None, Some(k)) => Some(Policy::uniform(enumerate_params(&model)?.len(), k)),
        (None, None) => None,
    };
    if let Some(p) = policy {
        model = instantiate(&model, &p)?;
    }
    let props = a
        .properties
        .iter()
        .map(|p| p.parse::<Property>())
        .collect::<Result<Vec<_>, _>>()?;
    let opts = if a.permissive { BuildOptions::permissive() } else { BuildOptions::default() };
    let d = build(&model, &opts)?;
    tracing::info!(states = d.num_states(), transitions = d.num_transitions(), "built");
    if let Some(path) = &a.export {
        write_text(path, &export(&d))?;
    }
    for p in &props {
        println!("{p} = {}", check(&d, p)?);
    }
    Ok(())
}

fn evaluator(model: &Path, objectives: &ObjectiveArgs) -> Result<Evaluator, CliError> {
    let model = read_model(model)?;
    Ok(Evaluator::with_cache(&model, objectives.load()?, Arc::new(EvalCache::default()))?)
}

fn write_set(out: Option<&Path>, set: &PolicySet) -> Result<(), CliError> {
    match out {
        Some(p) => write_policies(p, set),
        None => emit(None, &set.to_csv()),
    }
}

fn baseline(a: BaselineArgs) -> Result<(), CliError> {
    let eval = evaluator(&a.model, &a.objectives)?;
    let points = eval.evaluate_all(&baseline_policies(eval.params()))?;
    let set = PolicySet {
        objectives: eval.objectives().to_vec(),
        points,
    };
    write_set(a.out.as_deref(), &set)
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut ga = load_config(a.config.as_deref(), a.preset)?.experiment.ga;
    if let Some(p) = a.population {
        ga.population = p;
    }
    if let Some(g) = a.generations {
        ga.generations = g;
    }
    if let Some(s) = a.seed {
        ga.seed = s;
    }
    let eval = evaluator(&a.model, &a.objectives)?;
    let front = if a.exhaustive {
        exhaustive(&eval, EXHAUSTIVE_CAP)?
    } else {
        nsga2(&eval, &ga)?.front
    };
    tracing::info!(
        evaluations = eval.evaluations(),
        cache_hits = eval.cache_hits(),
        points = front.len(),
        "search finished"
    );
    write_set(a.out.as_deref(), &PolicySet::from_front(&front))
}

fn read_front(path: &Path) -> Result<ParetoFront, CliError> {
    Ok(read_policies(path)?.0.front())
}

fn metrics(a: MetricsArgs) -> Result<(), CliError> {
    let baseline = read_front(&a.baseline)?;
    let runs = a.parley.iter().map(|p| read_front(p)).collect::<Result<Vec<_>, _>>()?;
    let settings = match a.settings.is_empty() {
        true => RequirementSetting::grid(),
        false => a.settings,
    };
    let rows = indicator_rows(a.map_id, &baseline, &runs, &settings)?;
    let mut csv = format!("{}\n", parley_core::experiment::ROW_HEADER);
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    match a.out {
        Some(p) => write_table(&p, &csv, &rows),
        None => emit(None, &csv),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Selection {
    pub policy_id: usize,
    pub objectives: BTreeMap<String, f64>,
    pub policy: Vec<i64>,
}

fn select(a: SelectArgs) -> Result<(), CliError> {
    let (set, has_policies) = read_policies(&a.front)?;
    if !has_policies {
        return Err(CliError::model(format!(
            "{}: no JSON sidecar, so the policies are unknown",
            a.front.display()
        )));
    }
    if a.min_success.is_none() && a.max_cost.is_none() && !a.knee {
        return Err(CliError::usage("give a requirement (--min-success/--max-cost), --knee, or both"));
    }
    let front = set.front();
    let req = RequirementSetting {
        min_success: a.min_success.unwrap_or(0.0),
        max_cost: a.max_cost.unwrap_or(f64::INFINITY),
    };
    let all = success_cost(&front);
    let accepted: Vec<usize> = (0..all.len()).filter(|&i| req.accepts(all[i])).collect();
    let pts = filter_points(&all, &req);
    let chosen = if a.knee {
        knee_point(&pts).map(|k| accepted[k])
    } else {
        // Cheapest acceptable policy, higher success on ties.
        accepted
            .iter()
            .copied()
            .min_by(|&i, &j| all[i].1.total_cmp(&all[j].1).then(all[j].0.total_cmp(&all[i].0)))
    };
    let i = chosen.ok_or_else(|| CliError::model("no policy on the front meets the requirement"))?;
    let p = &front.points[i];
    let sel = Selection {
        policy_id: set.points.iter().position(|q| q == p).unwrap_or(i),
        objectives: front.objectives.iter().map(|o| o.name.clone()).zip(p.objectives.iter().copied()).collect(),
        policy: p.policy.0.clone(),
    };
    let text = serde_json::to_string_pretty(&sel).map_err(CliError::model)? + "\n";
    emit(a.out.as_deref(), &text)
}

fn apply_overrides(cfg: &mut HarnessConfig, a: &ExperimentArgs, jobs: Option<usize>) {
    let e = &mut cfg.experiment;
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value {
                $field = v;
            }
        };
    }
    set!(e.maps, a.maps);
    set!(e.size, a.size);
    set!(e.runs, a.runs);
    set!(e.map_seed, a.map_seed);
    set!(e.ga.seed, a.seed);
    set!(e.ga.population, a.population);
    set!(e.ga.generations, a.generations);
    if a.c_max.is_some() {
        e.c_max = a.c_max;
    }
    if jobs.is_some() {
        e.jobs = jobs;
    }
    if !a.settings.is_empty() {
        e.settings = a.settings.clone();
    }
    if let Some(o) = &a.out {
        cfg.out_dir = Some(o.clone());
    }
}

/// Writes every artifact of a finished experiment below `dir`.
pub fn write_report(dir: &Path, cfg: &HarnessConfig, report: &ExperimentReport) -> Result<(), CliError> {
    write_text(&dir.join("config.toml"), &to_toml(cfg)?)?;
    let rows: Vec<_> = report.maps.iter().flat_map(|m| m.rows.clone()).collect();
    write_table(&dir.join("indicators.csv"), &report.rows_csv(), &rows)?;
    write_table(&dir.join("summary.csv"), &report.summary_csv(), &report.summary)?;
    let mut failures = String::from("map_id,error\n");
    for (i, e) in &report.failures {
        failures.push_str(&format!("{i},\"{}\"\n", e.replace('"', "\"\"")));
    }
    write_table(&dir.join("failures.csv"), &failures, &report.failures)?;
    write_json(&dir.join("report.json"), report)?;
    for m in &report.maps {
        write_text(&dir.join("maps").join(map_file_name(m.map_id)), &m.map)?;
        let fronts = dir.join("fronts");
        write_policies(
            &fronts.join(format!("map_{:03}_baseline.csv", m.map_id)),
            &PolicySet::from_front(&m.baseline),
        )?;
        for (r, f) in m.runs.iter().enumerate() {
            write_policies(&fronts.join(format!("map_{:03}_run_{r}.csv", m.map_id)), &PolicySet::from_front(f))?;
        }
    }
    Ok(())
}

fn experiment(a: ExperimentArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let mut cfg = load_config(a.config.as_deref(), a.preset)?;
    apply_overrides(&mut cfg, &a, jobs);
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let report = run_experiment(&cfg.experiment)?;
    write_report(&dir, &cfg, &report)?;
    let mut timings = String::from("map_id,seconds\n");
    for m in &report.maps {
        timings.push_str(&format!("{},{:.3}\n", m.map_id, m.seconds));
    }
    write_text(&dir.join("timings.csv"), &timings)?;
    print!("{}", report.summary_csv());
    if !report.failures.is_empty() {
        eprintln!("{} of {} maps failed; see failures.csv", report.failures.len(), cfg.experiment.maps);
    }
    Ok(())
}

fn scale(a: ScaleArgs) -> Result<(), CliError> {
    let rows = a
        .sizes
        .iter()
        .map(|&n| scale_row(n, a.seed, &RobotModelCfg::default()))
        .collect::<Result<Vec<ScaleRow>, _>>()?;
    let mut csv = format!("{SCALE_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    match a.out {
        Some(p) => write_table(&p, &csv, &rows),
        None => emit(None, &csv),
    }
}

fn plot_cmd(a: PlotArgs) -> Result<(), CliError> {
    let mut series = Vec::new();
    if let Some(b) = &a.baseline {
        series.push(Series {
            name: "baseline".into(),
            marker: Marker::Cross,
            points: success_cost(&read_front(b)?),
        });
    }
    for f in &a.front {
        series.push(Series {
            name: f.display().to_string(),
            marker: Marker::Circle,
            points: success_cost(&read_front(f)?),
        });
    }
    let req = match (a.min_success, a.max_cost) {
        (Some(s), Some(c)) => Some(RequirementSetting::new(s, c)?),
        _ => None,
    };
    emit(a.out.as_deref(), &plot::render(&series, req.as_ref()))
}
