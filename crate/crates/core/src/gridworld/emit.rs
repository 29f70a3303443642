use std::fmt::Write;

use parley_prism::{parse, Model};
use serde::{Deserialize, Serialize};

use super::controller::{Move, MovementPolicy};
use super::map::{Cell, GridMap};
use super::GridError;
use crate::augment::AugmentSpec;
use crate::mc::{Objective, Property, Sense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotModelCfg {
    /// Probability of drifting into each of the three unintended directions.
    pub p: f64,
    pub move_cost: f64,
    pub localisation_cost: f64,
    /// Upper bound of the localisation period and of the step counter.
    pub c_max: i64,
    /// Localisation period `c` of the unaugmented model.
    pub period: i64,
}

impl Default for RobotModelCfg {
    fn default() -> Self {
        Self {
            p: 0.01,
            move_cost: 1.0,
            localisation_cost: 5.0,
            c_max: 10,
            period: 2,
        }
    }
}

impl RobotModelCfg {
    /// Defaults for an `n`-by-`n` map: `c_max = n`.
    pub fn for_size(n: usize) -> Self {
        let c_max = n as i64;
        Self {
            c_max,
            period: 2.min(c_max),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(0.0..1.0 / 3.0).contains(&self.p) {
            return Err(GridError::Invalid(format!("deviation probability {} must satisfy 0 <= 3p < 1", self.p)));
        }
        if self.move_cost < 0.0 || self.localisation_cost < 0.0 {
            return Err(GridError::Invalid("costs must be non-negative".into()));
        }
        if self.c_max < 1 || self.period < 1 || self.period > self.c_max {
            return Err(GridError::Invalid(format!(
                "period {} must lie in [1..{}]",
                self.period, self.c_max
            )));
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn update(m: Move, x: &str, y: &str) -> String {
    match m {
        Move::East => format!("({x}'=min({x}+1, N))"),
        Move::North => format!("({y}'=min({y}+1, N))"),
        Move::West => format!("({x}'=max({x}-1, 0))"),
        Move::South => format!("({y}'=max({y}-1, 0))"),
    }
}

fn at(cells: &[Cell], x: &str, y: &str) -> String {
    let terms: Vec<String> = cells.iter().map(|(a, b)| format!("({x}={a} & {y}={b})")).collect();
    match terms.len() {
        0 => "false".into(),
        _ => terms.join(" | "),
    }
}

/// Robot model in the shape of the running example: `Robot` holds the true
/// position, `Adaptation_MAPE_Controller` the precomputed moves and
/// `Knowledge` the estimate, localising every `c` moves.
pub fn emit_model(map: &GridMap, controller: &MovementPolicy, cfg: &RobotModelCfg) -> Result<Model, GridError> {
    cfg.validate()?;
    let text = emit_text(map, controller, cfg);
    parse(&text).map_err(|e| GridError::Invalid(format!("emitted model does not parse: {e}")))
}

pub fn emit_text(map: &GridMap, controller: &MovementPolicy, cfg: &RobotModelCfg) -> String {
    let (sx, sy) = map.start;
    let (dx, dy) = map.destination;
    let obstacles: Vec<Cell> = map.obstacles().collect();
    let crash = at(&obstacles, "x", "y");
    let safe = if obstacles.is_empty() { "true".to_string() } else { format!("!({crash})") };
    let mut s = String::new();

    let _ = writeln!(s, "// Robot on a {0}x{0} map from ({sx},{sy}) to ({dx},{dy}).", map.size);
    let _ = writeln!(s, "dtmc\n");
    let _ = writeln!(s, "const int N = {};", map.size - 1);
    let _ = writeln!(s, "const double p = {:?};", cfg.p);
    let _ = writeln!(s, "const int c = {};\n", cfg.period);

    let _ = writeln!(s, "module Robot");
    let _ = writeln!(s, "  x : [0..N] init {sx};");
    let _ = writeln!(s, "  y : [0..N] init {sy};");
    for m in Move::ALL {
        let _ = write!(s, "  [{m}] {safe} ->\n    (1-3*p): {}", update(m, "x", "y"));
        for other in Move::ALL.into_iter().filter(|&o| o != m) {
            let _ = write!(s, " +\n    p: {}", update(other, "x", "y"));
        }
        let _ = writeln!(s, ";");
    }
    let _ = writeln!(s, "endmodule\n");

    let _ = writeln!(s, "module Adaptation_MAPE_Controller");
    let mut cells: Vec<(&Cell, &Move)> = controller.moves.iter().collect();
    cells.sort_by_key(|((x, y), _)| (*y, *x));
    for ((x, y), m) in &cells {
        let _ = writeln!(s, "  [{m}] (xhat={x}) & (yhat={y}) -> true;");
    }
    // Keeps every move in the controller's alphabet so unused moves never fire.
    for m in Move::ALL.into_iter().filter(|m| !cells.iter().any(|(_, c)| *c == m)) {
        let _ = writeln!(s, "  [{m}] false -> true;");
    }
    let _ = writeln!(s, "endmodule\n");

    let _ = writeln!(s, "module Knowledge");
    let _ = writeln!(s, "  xhat : [0..N] init {sx};");
    let _ = writeln!(s, "  yhat : [0..N] init {sy};");
    let _ = writeln!(s, "  step : [1..{}] init 1;", cfg.c_max);
    let _ = writeln!(s, "  ready : bool init true;");
    for m in Move::ALL {
        let _ = writeln!(s, "  [{m}] ready -> {} & (ready'=false);", update(m, "xhat", "yhat"));
    }
    let _ = writeln!(s, "  [localisation] step>=c & !ready -> (xhat'=x) & (yhat'=y) & (step'=1) & (ready'=true);");
    let _ = writeln!(s, "  [skip] step<c & !ready -> (step'=step+1) & (ready'=true);");
    let _ = writeln!(
        s,
        "  [confirm] ready & xhat={dx} & yhat={dy} & !(x={dx} & y={dy}) -> (xhat'=x) & (yhat'=y) & (step'=1);"
    );
    let _ = writeln!(s, "endmodule\n");

    let stuck: Vec<Cell> = map
        .free_cells()
        .filter(|&c| c != map.destination && controller.get(c).is_none())
        .collect();
    let goal = format!("x={dx} & y={dy} & xhat={dx} & yhat={dy} & ready");
    let stuck = match stuck.is_empty() {
        true => "false".to_string(),
        false => format!("ready & ({})", at(&stuck, "xhat", "yhat")),
    };
    let _ = writeln!(s, "label \"goal\" = {goal};");
    let _ = writeln!(s, "label \"crash\" = {crash};");
    let _ = writeln!(s, "label \"stuck\" = {stuck};");
    let _ = writeln!(s, "label \"done\" = ({goal}) | ({crash}) | ({stuck});\n");

    let _ = writeln!(s, "rewards \"cost\"");
    for m in Move::ALL {
        let _ = writeln!(s, "  [{m}] true : {};", num(cfg.move_cost));
    }
    let _ = writeln!(s, "  [localisation] true : {};", num(cfg.localisation_cost));
    let _ = writeln!(s, "  [confirm] true : {};", num(cfg.localisation_cost));
    let _ = writeln!(s, "endrewards");
    s
}

/// Decisions per estimated position, adapting the localisation period.
pub fn robot_augment_spec(c_max: i64) -> AugmentSpec {
    AugmentSpec {
        pre_labels: ["east", "north", "south", "west"].map(String::from).to_vec(),
        post_labels: ["localisation", "skip"].map(String::from).to_vec(),
        decision_vars: vec!["xhat".into(), "yhat".into()],
        controlled_constant: "c".into(),
        c_range: (1, c_max),
        ground_truth_modules: vec!["Robot".into()],
    }
}

/// Mission success (maximised) and mission cost until termination (minimised).
pub fn robot_objectives() -> Vec<Objective> {
    vec![
        Objective::new("success", Property::reach("goal"), Sense::Maximize),
        Objective::new("cost", Property::reward("cost", "done"), Sense::Minimize),
    ]
}
