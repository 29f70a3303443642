//! Harness configuration: a preset, optionally overlaid with a TOML file.

use std::path::{Path, PathBuf};

use parley_core::experiment::ExperimentConfig;
use parley_core::webapp::WebAppCfg;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::CliError;

const EXPERIMENT_KEYS: &[&str] = &[
    "maps",
    "size",
    "map_seed",
    "sigma",
    "obstacle_penalty",
    "c_max",
    "robot",
    "ga",
    "runs",
    "settings",
    "jobs",
];
const HARNESS_KEYS: &[&str] = &["preset", "out_dir", "webapp"];
const GA_KEYS: &[&str] = &[
    "population",
    "generations",
    "crossover_rate",
    "mutation_rate",
    "tournament",
    "seed",
    "seed_baseline",
    "eliminate_duplicates",
];
const ROBOT_KEYS: &[&str] = &["p", "move_cost", "localisation_cost", "c_max", "period"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Desk,
    Paper,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::Desk => ExperimentConfig::desk(),
            Preset::Paper => ExperimentConfig::paper(),
        }
    }

    fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(CliError::usage(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessConfig {
    pub out_dir: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub webapp: WebAppCfg,
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn check_keys(table: &Table, allowed: &[&str], section: &str) -> Result<(), CliError> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::usage(format!("unknown key `{k}` in {section}"))),
        None => Ok(()),
    }
}

fn section<'a>(table: &'a Table, key: &str) -> Result<Option<&'a Table>, CliError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(CliError::usage(format!("`{key}` must be a table"))),
    }
}

/// Parses configuration text. A `preset` key in the text is used unless
/// `preset` is given.
pub fn parse_config(text: &str, preset: Option<Preset>) -> Result<HarnessConfig, CliError> {
    let mut file: Table = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
    let all: Vec<&str> = EXPERIMENT_KEYS.iter().chain(HARNESS_KEYS).copied().collect();
    check_keys(&file, &all, "the top level")?;
    if let Some(ga) = section(&file, "ga")? {
        check_keys(ga, GA_KEYS, "[ga]")?;
    }
    if let Some(robot) = section(&file, "robot")? {
        check_keys(robot, ROBOT_KEYS, "[robot]")?;
    }

    let named = match file.remove("preset") {
        Some(Value::String(s)) => Some(Preset::parse(&s)?),
        Some(_) => return Err(CliError::usage("`preset` must be a string")),
        None => None,
    };
    let out_dir = match file.remove("out_dir") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(CliError::usage("`out_dir` must be a string")),
        None => None,
    };
    let webapp = match file.remove("webapp") {
        Some(v) => v
            .try_into::<WebAppCfg>()
            .map_err(|e| CliError::usage(format!("config [webapp]: {e}")))?,
        None => WebAppCfg::default(),
    };

    let base = preset.or(named).unwrap_or(Preset::Desk).config();
    let mut merged = Table::try_from(&base).map_err(|e| CliError::usage(e.to_string()))?;
    merge(&mut merged, file);
    let experiment: ExperimentConfig = Value::Table(merged)
        .try_into()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    Ok(HarnessConfig {
        out_dir,
        experiment,
        webapp,
    })
}

pub fn load_config(path: Option<&Path>, preset: Option<Preset>) -> Result<HarnessConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_config(&text, preset)
        }
        None => parse_config("", preset),
    }
}

/// The effective configuration as TOML, loadable again with [`parse_config`].
pub fn to_toml(cfg: &HarnessConfig) -> Result<String, CliError> {
    let mut t = Table::try_from(&cfg.experiment).map_err(|e| CliError::model(e))?;
    if let Some(dir) = &cfg.out_dir {
        t.insert("out_dir".into(), Value::String(dir.display().to_string()));
    }
    t.insert(
        "webapp".into(),
        Value::try_from(&cfg.webapp).map_err(|e| CliError::model(e))?,
    );
    toml::to_string(&t).map_err(|e| CliError::model(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_desk_preset() {
        let cfg = parse_config("", None).unwrap();
        assert_eq!(cfg.experiment, ExperimentConfig::desk());
        assert_eq!(cfg.webapp, WebAppCfg::default());
    }

    #[test]
    fn file_values_override_the_preset() {
        let text = r#"
            preset = "paper"
            maps = 4
            out_dir = "out"
            [ga]
            generations = 7
            [[settings]]
            min_success = 0.8
            max_cost = 60
        "#;
        let cfg = parse_config(text, None).unwrap();
        let paper = ExperimentConfig::paper();
        assert_eq!(cfg.experiment.maps, 4);
        assert_eq!(cfg.experiment.runs, paper.runs);
        assert_eq!(cfg.experiment.ga.generations, 7);
        assert_eq!(cfg.experiment.ga.population, paper.ga.population);
        assert_eq!(cfg.experiment.settings.len(), 1);
        assert_eq!(cfg.out_dir, Some(PathBuf::from("out")));
    }

    #[test]
    fn explicit_preset_wins_over_the_file() {
        let cfg = parse_config("preset = \"paper\"", Some(Preset::Desk)).unwrap();
        assert_eq!(cfg.experiment, ExperimentConfig::desk());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("mapz = 3", None).is_err());
        assert!(parse_config("[ga]\npopulaton = 3", None).is_err());
        assert!(parse_config("preset = \"huge\"", None).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let mut cfg = parse_config("maps = 2\n[robot]\np = 0.02", None).unwrap();
        cfg.out_dir = Some("results".into());
        cfg.experiment.c_max = Some(6);
        let again = parse_config(&to_toml(&cfg).unwrap(), None).unwrap();
        assert_eq!(again, cfg);
    }
}
