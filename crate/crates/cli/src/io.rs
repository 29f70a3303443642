//! Reading and writing models, fronts and tables.

use std::path::{Path, PathBuf};

use parley_core::gridworld::robot_objectives;
use parley_core::mc::Objective;
use parley_core::synthesis::{EvaluatedPolicy, ParetoFront};
use parley_prism::Model;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn read_model(path: &Path) -> Result<Model, CliError> {
    let text = read_text(path)?;
    parley_prism::parse(&text).map_err(|e| CliError::model(format!("{}: {e}", path.display())))
}

pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::model)?;
    write_text(path, &(text + "\n"))
}

/// Writes a CSV table and its JSON sidecar next to it.
pub fn write_table(path: &Path, csv: &str, json: &impl Serialize) -> Result<(), CliError> {
    write_text(path, csv)?;
    write_json(&sidecar(path), json)
}

/// Evaluated policies as persisted: the CSV holds `policy_id` and one
/// column per objective, the sidecar holds the policies themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub objectives: Vec<Objective>,
    pub points: Vec<EvaluatedPolicy>,
}

impl PolicySet {
    pub fn from_front(front: &ParetoFront) -> Self {
        Self {
            objectives: front.objectives.clone(),
            points: front.points.clone(),
        }
    }

    pub fn front(&self) -> ParetoFront {
        ParetoFront::from_points(self.objectives.clone(), self.points.clone())
    }

    pub fn to_csv(&self) -> String {
        ParetoFront {
            objectives: self.objectives.clone(),
            points: self.points.clone(),
        }
        .to_csv()
    }
}

pub fn write_policies(path: &Path, set: &PolicySet) -> Result<(), CliError> {
    write_table(path, &set.to_csv(), set)
}

/// Parses a `policy_id,<objectives>` CSV. Columns are matched to the robot
/// objectives by name; the policies themselves are unknown.
pub fn parse_front_csv(text: &str) -> Result<PolicySet, CliError> {
    let bad = |line: usize, m: &str| CliError::model(format!("front CSV line {line}: {m}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"policy_id") {
        return Err(bad(1, "first column must be `policy_id`"));
    }
    let objectives: Vec<Objective> = cols[1..]
        .iter()
        .map(|name| {
            robot_objectives()
                .into_iter()
                .find(|o| o.name == *name)
                .ok_or_else(|| bad(1, &format!("unknown objective column `{name}`; keep the JSON sidecar")))
        })
        .collect::<Result<_, _>>()?;
    if objectives.len() < 2 {
        return Err(bad(1, "need at least two objective columns"));
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(bad(i + 1, &format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(i + 1, &format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        points.push(EvaluatedPolicy {
            policy: parley_core::augment::Policy(Vec::new()),
            objectives: values,
            states: 0,
            transitions: 0,
            diverged: false,
        });
    }
    Ok(PolicySet { objectives, points })
}

/// Loads a policy set from its JSON sidecar when present, else from the CSV.
pub fn read_policies(path: &Path) -> Result<(PolicySet, bool), CliError> {
    let side = sidecar(path);
    if path.extension().is_some_and(|e| e == "json") || side.exists() {
        let json_path = if path.extension().is_some_and(|e| e == "json") { path.to_path_buf() } else { side };
        let text = read_text(&json_path)?;
        let set: PolicySet = serde_json::from_str(&text)
            .map_err(|e| CliError::model(format!("{}: {e}", json_path.display())))?;
        return Ok((set, true));
    }
    Ok((parse_front_csv(&read_text(path)?)?, false))
}
