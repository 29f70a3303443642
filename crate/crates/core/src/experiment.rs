//! Map-by-map comparison of synthesized policies against the fixed-period
//! baseline, and the scalability sweep over map sizes.

use std::sync::Arc;
use std::time::Instant;

use parley_prism::Model;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment, Policy};
use crate::gridworld::{
    dijkstra_controller, emit_model, generate_map, robot_augment_spec, robot_objectives, GridError, GridMap,
    RobotModelCfg, DEFAULT_OBSTACLE_PENALTY, DEFAULT_SIGMA,
};
use crate::indicators::{filter_points, hypervolume_2d, mann_whitney_u, spread, IndicatorError, RequirementSetting};
use crate::mc::{build, check, BuildOptions};
use crate::synthesis::{baseline_policies, nsga2, EvalCache, Evaluator, GaConfig, ParetoFront, SynthError};

/// Significance level for the rank-sum comparisons.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub maps: usize,
    pub size: usize,
    /// Map `i` is generated from `map_seed + i`.
    pub map_seed: u64,
    pub sigma: f64,
    pub obstacle_penalty: f64,
    /// Upper end of the period range; `None` uses the map size.
    pub c_max: Option<i64>,
    pub robot: RobotModelCfg,
    pub ga: GaConfig,
    pub runs: usize,
    pub settings: Vec<RequirementSetting>,
    /// Worker threads; `None` leaves the choice to the thread pool.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Small enough to finish on a laptop within the hour.
    pub fn desk() -> Self {
        Self {
            maps: 10,
            size: 10,
            map_seed: 0,
            sigma: DEFAULT_SIGMA,
            obstacle_penalty: DEFAULT_OBSTACLE_PENALTY,
            c_max: None,
            robot: RobotModelCfg::default(),
            ga: GaConfig {
                population: 40,
                generations: 20,
                seed_baseline: false,
                ..GaConfig::default()
            },
            runs: 3,
            settings: RequirementSetting::grid(),
            jobs: None,
        }
    }

    /// Ninety maps, ten runs each, population 100 over 40 generations.
    pub fn paper() -> Self {
        Self {
            maps: 90,
            runs: 10,
            ga: GaConfig {
                population: 100,
                generations: 40,
                seed_baseline: false,
                ..GaConfig::default()
            },
            ..Self::desk()
        }
    }

    pub fn c_max(&self) -> i64 {
        self.c_max.unwrap_or(self.size as i64)
    }

    pub fn robot_cfg(&self) -> RobotModelCfg {
        let c_max = self.c_max();
        RobotModelCfg {
            c_max,
            period: self.robot.period.min(c_max),
            ..self.robot.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.runs < 1 {
            return bad("runs must be at least 1");
        }
        if self.settings.is_empty() {
            return bad("requirement settings must not be empty");
        }
        if self.size < 3 {
            return bad("map size must be at least 3");
        }
        if self.c_max() < 1 {
            return bad("c_max must be at least 1");
        }
        for s in &self.settings {
            RequirementSetting::new(s.min_success, s.max_cost)?;
        }
        self.ga.validate()?;
        self.robot_cfg().validate()?;
        Ok(())
    }

    /// GA seed for run `run` on map `map`.
    pub fn run_seed(&self, map: usize, run: usize) -> u64 {
        self.ga.seed.wrapping_add((map * self.runs + run) as u64)
    }
}

/// A map with its emitted and augmented robot models.
pub struct RobotCase {
    pub map: GridMap,
    pub model: Model,
    pub augmented: Model,
}

pub fn robot_case(map: GridMap, cfg: &RobotModelCfg, obstacle_penalty: f64) -> Result<RobotCase, ExperimentError> {
    let ctl = dijkstra_controller(&map, obstacle_penalty);
    let model = emit_model(&map, &ctl, cfg)?;
    let augmented = augment(&model, &robot_augment_spec(cfg.c_max)).map_err(SynthError::from)?;
    Ok(RobotCase { map, model, augmented })
}

/// Indicator values of one run under one requirement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub map_id: usize,
    pub setting: String,
    pub run: usize,
    pub hv_parley: f64,
    pub hv_baseline: f64,
    pub sp_parley: f64,
    pub sp_baseline: f64,
    /// Rank-sum test of the runs' hypervolumes against the baseline value.
    pub u: f64,
    pub p: f64,
    /// Same for spread.
    pub u_sp: f64,
    pub p_sp: f64,
}

pub const ROW_HEADER: &str = "map_id,setting,run,hv_parley,hv_baseline,sp_parley,sp_baseline,u,p,u_sp,p_sp";

impl IndicatorRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.map_id,
            self.setting,
            self.run,
            self.hv_parley,
            self.hv_baseline,
            self.sp_parley,
            self.sp_baseline,
            self.u,
            self.p,
            self.u_sp,
            self.p_sp
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub map_id: usize,
    pub map: String,
    pub baseline: ParetoFront,
    pub runs: Vec<ParetoFront>,
    pub rows: Vec<IndicatorRow>,
    /// Wall-clock time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

/// Filtered hypervolume and spread of a front under one setting.
pub fn front_indicators(front: &ParetoFront, req: &RequirementSetting) -> Result<(f64, f64), IndicatorError> {
    let pts = filter_points(&crate::indicators::success_cost(front), req);
    let hv = hypervolume_2d(&pts, req.reference());
    let sp = match spread(&pts) {
        Ok(s) => s.value,
        // Coinciding points carry no diversity; score them like a single point.
        Err(IndicatorError::DegenerateFront) => 1.0,
        Err(e) => return Err(e),
    };
    Ok((hv, sp))
}

/// One-sided p in the direction of the observed difference between the
/// runs and the baseline value replicated to the same sample size.
pub fn directed_test(parley: &[f64], baseline: f64) -> Result<(f64, f64), IndicatorError> {
    let r = mann_whitney_u(parley, &vec![baseline; parley.len()])?;
    let mean = parley.iter().sum::<f64>() / parley.len() as f64;
    let p = if mean > baseline {
        r.p_greater
    } else if mean < baseline {
        r.p_less
    } else {
        1.0
    };
    Ok((r.u, p))
}

/// One row per run and setting comparing `runs` against `baseline`.
pub fn indicator_rows(
    map_id: usize,
    baseline: &ParetoFront,
    runs: &[ParetoFront],
    settings: &[RequirementSetting],
) -> Result<Vec<IndicatorRow>, IndicatorError> {
    let mut rows = Vec::new();
    for req in settings {
        let (hv_b, sp_b) = front_indicators(baseline, req)?;
        let values = runs.iter().map(|f| front_indicators(f, req)).collect::<Result<Vec<_>, _>>()?;
        let hvs: Vec<f64> = values.iter().map(|v| v.0).collect();
        let sps: Vec<f64> = values.iter().map(|v| v.1).collect();
        let (u, p) = directed_test(&hvs, hv_b)?;
        let (u_sp, p_sp) = directed_test(&sps, sp_b)?;
        for (run, &(hv, sp)) in values.iter().enumerate() {
            rows.push(IndicatorRow {
                map_id,
                setting: req.to_string(),
                run,
                hv_parley: hv,
                hv_baseline: hv_b,
                sp_parley: sp,
                sp_baseline: sp_b,
                u,
                p,
                u_sp,
                p_sp,
            });
        }
    }
    Ok(rows)
}

pub fn run_map(cfg: &ExperimentConfig, map_id: usize) -> Result<MapResult, ExperimentError> {
    let start = Instant::now();
    let robot = cfg.robot_cfg();
    let map = generate_map(cfg.size, cfg.map_seed.wrapping_add(map_id as u64), cfg.sigma)?;
    let case = robot_case(map, &robot, cfg.obstacle_penalty)?;
    let cache = Arc::new(EvalCache::default());
    let eval = Evaluator::with_cache(&case.augmented, robot_objectives(), cache)?;
    let baseline = ParetoFront::from_points(robot_objectives(), eval.evaluate_all(&baseline_policies(eval.params()))?);
    let runs = (0..cfg.runs)
        .map(|r| {
            let ga = GaConfig {
                seed: cfg.run_seed(map_id, r),
                ..cfg.ga.clone()
            };
            nsga2(&eval, &ga).map(|o| o.front)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = indicator_rows(map_id, &baseline, &runs, &cfg.settings)?;
    Ok(MapResult {
        map_id,
        map: case.map.to_string(),
        baseline,
        runs,
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Counts of maps where the synthesized fronts are significantly better,
/// significantly worse, or not significantly different.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub better: usize,
    pub worse: usize,
    pub insignificant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub setting: String,
    pub hypervolume: Tally,
    pub spread: Tally,
    /// Maps where the mean synthesized hypervolume is at least the baseline's.
    pub hv_not_worse: usize,
    /// Maps where the mean synthesized spread is below the baseline's.
    pub sp_lower: usize,
    pub maps: usize,
}

pub const SUMMARY_HEADER: &str =
    "setting,maps,hv_better,hv_worse,hv_insignificant,sp_better,sp_worse,sp_insignificant,hv_not_worse,sp_lower";

impl SettingSummary {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.setting,
            self.maps,
            self.hypervolume.better,
            self.hypervolume.worse,
            self.hypervolume.insignificant,
            self.spread.better,
            self.spread.worse,
            self.spread.insignificant,
            self.hv_not_worse,
            self.sp_lower
        )
    }
}

pub fn summarise(settings: &[RequirementSetting], maps: &[MapResult]) -> Vec<SettingSummary> {
    settings
        .iter()
        .map(|req| {
            let name = req.to_string();
            let mut s = SettingSummary {
                setting: name.clone(),
                hypervolume: Tally::default(),
                spread: Tally::default(),
                hv_not_worse: 0,
                sp_lower: 0,
                maps: 0,
            };
            for m in maps {
                let rows: Vec<&IndicatorRow> = m.rows.iter().filter(|r| r.setting == name).collect();
                let Some(first) = rows.first() else { continue };
                s.maps += 1;
                let n = rows.len() as f64;
                let hv = rows.iter().map(|r| r.hv_parley).sum::<f64>() / n;
                let sp = rows.iter().map(|r| r.sp_parley).sum::<f64>() / n;
                s.hv_not_worse += (hv >= first.hv_baseline) as usize;
                s.sp_lower += (sp < first.sp_baseline) as usize;
                let tally = |t: &mut Tally, gain: f64, p: f64| match (p <= ALPHA, gain) {
                    (true, g) if g > 0.0 => t.better += 1,
                    (true, g) if g < 0.0 => t.worse += 1,
                    _ => t.insignificant += 1,
                };
                tally(&mut s.hypervolume, hv - first.hv_baseline, first.p);
                tally(&mut s.spread, first.sp_baseline - sp, first.p_sp);
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub maps: Vec<MapResult>,
    pub failures: Vec<(usize, String)>,
    pub summary: Vec<SettingSummary>,
}

impl ExperimentReport {
    pub fn rows_csv(&self) -> String {
        let mut s = format!("{ROW_HEADER}\n");
        for m in &self.maps {
            for r in &m.rows {
                s.push_str(&r.csv());
                s.push('\n');
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = format!("{SUMMARY_HEADER}\n");
        for r in &self.summary {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    }
}

/// Runs every map; failing maps are reported rather than aborting the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let work = || {
        (0..cfg.maps)
            .into_par_iter()
            .map(|i| (i, run_map(cfg, i)))
            .collect::<Vec<_>>()
    };
    let results = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut maps = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(m) => maps.push(m),
            Err(e) => {
                tracing::warn!(map = i, error = %e, "map skipped");
                failures.push((i, e.to_string()));
            }
        }
    }
    let summary = summarise(&cfg.settings, &maps);
    Ok(ExperimentReport {
        config: cfg.clone(),
        maps,
        failures,
        summary,
    })
}

/// `n^(n*n)` written as a power, e.g. `10^100`.
pub fn search_space_power(n: usize, c_max: i64) -> String {
    format!("{c_max}^{}", n * n)
}

/// Decimal scientific notation of `base^exp`, e.g. `1e100` or `2.98e17`.
pub fn scientific(base: i64, exp: u64) -> String {
    let log = exp as f64 * (base as f64).log10();
    let mut e = log.floor();
    let mut mantissa = 10f64.powf(log - e);
    if (mantissa * 100.0).round() >= 1000.0 {
        mantissa /= 10.0;
        e += 1.0;
    }
    if (mantissa - 1.0).abs() < 5e-3 {
        format!("1e{e}")
    } else {
        format!("{mantissa:.2}e{e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub n: usize,
    pub params: usize,
    pub c_range: (i64, i64),
    pub search_space: String,
    pub search_space_decimal: String,
    /// Reachable states of the augmented model under the uniform policy
    /// at the default period.
    pub states: usize,
    pub transitions: usize,
    pub build_ms: f64,
    /// Slowest single property check.
    pub check_ms: f64,
}

pub const SCALE_HEADER: &str = "n,params,c_range,search_space,search_space_decimal,states,transitions,build_ms,check_ms";

impl ScaleRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{}..{},{},{},{},{},{:.3},{:.3}",
            self.n,
            self.params,
            self.c_range.0,
            self.c_range.1,
            self.search_space,
            self.search_space_decimal,
            self.states,
            self.transitions,
            self.build_ms,
            self.check_ms
        )
    }
}

pub fn scale_row(n: usize, seed: u64, base: &RobotModelCfg) -> Result<ScaleRow, ExperimentError> {
    let cfg = RobotModelCfg {
        c_max: n as i64,
        period: base.period.min(n as i64),
        ..base.clone()
    };
    let map = generate_map(n, seed, DEFAULT_SIGMA)?;
    let case = robot_case(map, &cfg, DEFAULT_OBSTACLE_PENALTY)?;
    let eval = Evaluator::new(&case.augmented, robot_objectives())?;
    let params = eval.params().len();
    let policy = Policy::uniform(params, cfg.period);
    let inst = crate::augment::instantiate(&case.augmented, &policy).map_err(SynthError::from)?;
    let t = Instant::now();
    let d = build(&inst, &BuildOptions::default()).map_err(SynthError::from)?;
    let build_ms = t.elapsed().as_secs_f64() * 1e3;
    let mut check_ms: f64 = 0.0;
    for o in robot_objectives() {
        let t = Instant::now();
        check(&d, &o.property).map_err(SynthError::from)?;
        check_ms = check_ms.max(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(ScaleRow {
        n,
        params,
        c_range: (1, cfg.c_max),
        search_space: search_space_power(n, cfg.c_max),
        search_space_decimal: scientific(cfg.c_max, (n * n) as u64),
        states: d.num_states(),
        transitions: d.num_transitions(),
        build_ms,
        check_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_notation() {
        assert_eq!(scientific(10, 100), "1e100");
        assert_eq!(scientific(5, 25), "2.98e17");
        assert_eq!(scientific(2, 10), "1.02e3");
        assert_eq!(search_space_power(15, 15), "15^225");
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::desk().validate().is_ok());
        assert!(ExperimentConfig::paper().validate().is_ok());
        assert!(ExperimentConfig { runs: 0, ..ExperimentConfig::desk() }.validate().is_err());
        assert!(ExperimentConfig { settings: vec![], ..ExperimentConfig::desk() }.validate().is_err());
    }

    #[test]
    fn directed_p_follows_the_difference() {
        let (_, p) = directed_test(&[2.0, 3.0, 4.0], 1.0).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        let (_, p) = directed_test(&[0.2, 0.3, 0.4], 1.0).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        assert_eq!(directed_test(&[1.0, 1.0], 1.0).unwrap().1, 1.0);
    }
}
