//! Self-protecting web application: an attacker infiltrates server A and
//! then database B, an intrusion detector reports a confidence level, and
//! the controller decides whether to pay for a scan of A before restoring.

use std::fmt::Write;

use parley_prism::{parse, Model};
use serde::{Deserialize, Serialize};

use crate::augment::AugmentSpec;
use crate::mc::{Objective, Property, Sense};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WebAppError {
    #[error("invalid web-app configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebAppCfg {
    /// Time-of-day steps until the episode ends.
    pub horizon: i64,
    /// Distinct restore-cost levels over the day.
    pub cost_levels: i64,
    /// Distinct detector confidence values.
    pub confidence_levels: i64,
    /// Per-step probability that an uncompromised A is infiltrated.
    pub attack_success: f64,
    /// Per-step probability that a compromised A spreads to B.
    pub escalation: f64,
    /// Per-step probability that the detector's rule set goes stale.
    pub stale_onset: f64,
    /// Per-step probability that a stale rule set is refreshed.
    pub stale_recovery: f64,
    /// Weight of uniform noise mixed into a stale detector's reports.
    pub stale_noise: f64,
    /// Confidence distribution when A is compromised; `None` uses a
    /// quadratic skew towards high confidence.
    pub true_positive: Option<Vec<f64>>,
    /// Confidence distribution when A is clean; `None` skews low.
    pub false_positive: Option<Vec<f64>>,
    pub scan_cost: f64,
    /// Restore costs per cost level step: level `l` costs `base * (l+1)`.
    pub restore_a_cost: f64,
    pub restore_ab_cost: f64,
    /// Cost per step while B is infected.
    pub breach_penalty: f64,
    /// Confidence at which an unscanned alert triggers a blind restore of A.
    pub alarm_threshold: i64,
    /// Confidence at which the unaugmented controller scans.
    pub scan_threshold: i64,
}

impl Default for WebAppCfg {
    fn default() -> Self {
        Self {
            horizon: 24,
            cost_levels: 12,
            confidence_levels: 11,
            attack_success: 0.1,
            escalation: 0.3,
            stale_onset: 0.05,
            stale_recovery: 0.2,
            stale_noise: 0.5,
            true_positive: None,
            false_positive: None,
            scan_cost: 1.0,
            restore_a_cost: 1.0,
            restore_ab_cost: 5.0,
            breach_penalty: 20.0,
            alarm_threshold: 5,
            scan_threshold: 7,
        }
    }
}

fn skewed(n: usize, high: bool) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|k| if high { (k + 1) as f64 } else { (n - k) as f64 }.powi(2))
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

impl WebAppCfg {
    /// Number of decision parameters after augmentation.
    pub fn parameter_count(&self) -> usize {
        (self.cost_levels * self.confidence_levels) as usize
    }

    pub fn true_positive_dist(&self) -> Vec<f64> {
        self.true_positive
            .clone()
            .unwrap_or_else(|| skewed(self.confidence_levels as usize, true))
    }

    pub fn false_positive_dist(&self) -> Vec<f64> {
        self.false_positive
            .clone()
            .unwrap_or_else(|| skewed(self.confidence_levels as usize, false))
    }

    /// Restore-cost level at time `t`, rising evenly over the day.
    pub fn level_at(&self, t: i64) -> i64 {
        (t * self.cost_levels / self.horizon).min(self.cost_levels - 1)
    }

    pub fn validate(&self) -> Result<(), WebAppError> {
        let bad = |m: String| Err(WebAppError::Invalid(m));
        if self.cost_levels < 2 || self.confidence_levels < 2 {
            return bad("level counts must be at least 2".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be positive".into());
        }
        for (name, p) in [
            ("attack_success", self.attack_success),
            ("escalation", self.escalation),
            ("stale_onset", self.stale_onset),
            ("stale_recovery", self.stale_recovery),
            ("stale_noise", self.stale_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, d) in [("true_positive", self.true_positive_dist()), ("false_positive", self.false_positive_dist())] {
            if d.len() != self.confidence_levels as usize {
                return bad(format!("{name} needs {} entries", self.confidence_levels));
            }
            if d.iter().any(|p| !(0.0..=1.0).contains(p)) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("{name} is not a distribution"));
            }
        }
        if [self.scan_cost, self.restore_a_cost, self.restore_ab_cost, self.breach_penalty]
            .iter()
            .any(|&c| c < 0.0)
        {
            return bad("costs must be non-negative".into());
        }
        if !(0..=self.confidence_levels).contains(&self.alarm_threshold)
            || !(0..=self.confidence_levels).contains(&self.scan_threshold)
        {
            return bad(format!("thresholds must lie in [0..{}]", self.confidence_levels));
        }
        Ok(())
    }
}

fn branches(dist: &[f64]) -> String {
    dist.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, p)| format!("{p:?}:(conf'={k})"))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn stale(dist: &[f64], noise: f64) -> Vec<f64> {
    let u = 1.0 / dist.len() as f64;
    dist.iter().map(|p| (1.0 - noise) * p + noise * u).collect()
}

pub fn emit_webapp_model(cfg: &WebAppCfg) -> Result<Model, WebAppError> {
    cfg.validate()?;
    let text = emit_webapp_text(cfg);
    parse(&text).map_err(|e| WebAppError::Invalid(format!("emitted model does not parse: {e}")))
}

pub fn emit_webapp_text(cfg: &WebAppCfg) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "// Web application under attack, {} steps per episode.", cfg.horizon);
    let _ = writeln!(s, "dtmc\n");
    let _ = writeln!(s, "const int H = {};", cfg.horizon);
    let _ = writeln!(s, "const int CL = {};", cfg.cost_levels);
    let _ = writeln!(s, "const int L = {};", cfg.confidence_levels);
    let _ = writeln!(s, "const int T = {};", cfg.alarm_threshold);
    let _ = writeln!(s, "const int c = {};", cfg.scan_threshold);
    let _ = writeln!(s, "const double pa = {:?};", cfg.attack_success);
    let _ = writeln!(s, "const double pb = {:?};", cfg.escalation);
    let _ = writeln!(s, "const double ps = {:?};", cfg.stale_onset);
    let _ = writeln!(s, "const double pr = {:?};\n", cfg.stale_recovery);

    let _ = writeln!(s, "module Clock");
    let _ = writeln!(s, "  t : [0..H] init 0;");
    let _ = writeln!(s, "  lvl : [0..CL-1] init {};", cfg.level_at(0));
    for t in 0..cfg.horizon {
        let _ = writeln!(s, "  [tick] t={t} -> (t'={}) & (lvl'={});", t + 1, cfg.level_at(t + 1));
    }
    let _ = writeln!(s, "endmodule\n");

    let _ = writeln!(s, "module Attacker");
    let _ = writeln!(s, "  a : bool init false;");
    let _ = writeln!(s, "  b : bool init false;");
    let _ = writeln!(s, "  [tick] !a -> pa:(a'=true) + (1-pa):true;");
    let _ = writeln!(s, "  [tick] a & !b -> pb:(b'=true) + (1-pb):true;");
    let _ = writeln!(s, "  [tick] a & b -> true;");
    let _ = writeln!(s, "  [restoreA] true -> (a'=false);");
    let _ = writeln!(s, "  [restoreAB] true -> (a'=false) & (b'=false);");
    let _ = writeln!(s, "endmodule\n");

    let tp = cfg.true_positive_dist();
    let fp = cfg.false_positive_dist();
    let _ = writeln!(s, "module IDS");
    let _ = writeln!(s, "  stale : bool init false;");
    let _ = writeln!(s, "  conf : [0..L-1] init 0;");
    let _ = writeln!(s, "  [tick] !stale -> ps:(stale'=true) & (conf'=0) + (1-ps):(conf'=0);");
    let _ = writeln!(s, "  [tick] stale -> pr:(stale'=false) & (conf'=0) + (1-pr):(conf'=0);");
    let _ = writeln!(s, "  [alert] a & !stale -> {};", branches(&tp));
    let _ = writeln!(s, "  [alert] a & stale -> {};", branches(&stale(&tp, cfg.stale_noise)));
    let _ = writeln!(s, "  [alert] !a & !stale -> {};", branches(&fp));
    let _ = writeln!(s, "  [alert] !a & stale -> {};", branches(&stale(&fp, cfg.stale_noise)));
    let _ = writeln!(s, "endmodule\n");

    let _ = writeln!(s, "module UAC");
    let _ = writeln!(s, "  phase : [0..3] init 0;");
    let _ = writeln!(s, "  [tick] phase=0 -> (phase'=1);");
    let _ = writeln!(s, "  [alert] phase=1 -> (phase'=2);");
    let _ = writeln!(s, "  [scan] phase=2 & conf>=c -> (phase'=3);");
    let _ = writeln!(s, "  [noscan] phase=2 & conf<c -> (phase'=3);");
    let _ = writeln!(s, "  [restoreAB] phase=3 & scanned & sb -> (phase'=0);");
    let _ = writeln!(s, "  [restoreA] phase=3 & ((scanned & sa & !sb) | (!scanned & conf>=T)) -> (phase'=0);");
    let _ = writeln!(s, "  [nop] phase=3 & ((scanned & !sa & !sb) | (!scanned & conf<T)) -> (phase'=0);");
    let _ = writeln!(s, "endmodule\n");

    let reset = "(scanned'=false) & (sa'=false) & (sb'=false)";
    let _ = writeln!(s, "module Knowledge");
    let _ = writeln!(s, "  scanned : bool init false;");
    let _ = writeln!(s, "  sa : bool init false;");
    let _ = writeln!(s, "  sb : bool init false;");
    let _ = writeln!(s, "  [scan] true -> (scanned'=true) & (sa'=a) & (sb'=b);");
    for act in ["restoreA", "restoreAB", "nop"] {
        let _ = writeln!(s, "  [{act}] true -> {reset};");
    }
    let _ = writeln!(s, "endmodule\n");

    let _ = writeln!(s, "label \"breached\" = b;");
    let _ = writeln!(s, "label \"done\" = t=H & phase=0;\n");

    let _ = writeln!(s, "rewards \"breach\"");
    let _ = writeln!(s, "  [tick] b : {:?};", cfg.breach_penalty);
    let _ = writeln!(s, "endrewards\n");
    let _ = writeln!(s, "rewards \"action\"");
    let _ = writeln!(s, "  [scan] true : {:?};", cfg.scan_cost);
    let _ = writeln!(s, "  [restoreA] true : {:?}*(lvl+1);", cfg.restore_a_cost);
    let _ = writeln!(s, "  [restoreAB] true : {:?}*(lvl+1);", cfg.restore_ab_cost);
    let _ = writeln!(s, "endrewards");
    s
}

/// One scan threshold per (cost level, confidence level) pair.
pub fn webapp_augment_spec(cfg: &WebAppCfg) -> AugmentSpec {
    AugmentSpec {
        pre_labels: vec!["alert".into()],
        post_labels: vec!["scan".into(), "noscan".into()],
        decision_vars: vec!["lvl".into(), "conf".into()],
        controlled_constant: "c".into(),
        c_range: (0, cfg.confidence_levels),
        ground_truth_modules: vec!["Attacker".into()],
    }
}

/// Expected infected-database cost and expected cost of controlled actions.
pub fn webapp_objectives() -> Vec<Objective> {
    vec![
        Objective::new("breach", Property::reward("breach", "done"), Sense::Minimize),
        Objective::new("action", Property::reward("action", "done"), Sense::Minimize),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{augment, enumerate_params};

    #[test]
    fn default_model_is_well_formed() {
        let m = emit_webapp_model(&WebAppCfg::default()).unwrap();
        assert!(parley_prism::typecheck(&m).is_empty(), "{:?}", parley_prism::typecheck(&m));
        let a = augment(&m, &webapp_augment_spec(&WebAppCfg::default())).unwrap();
        assert_eq!(enumerate_params(&a).unwrap().len(), 132);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            WebAppCfg { cost_levels: 1, ..Default::default() },
            WebAppCfg { attack_success: 1.5, ..Default::default() },
            WebAppCfg { true_positive: Some(vec![0.5; 11]), ..Default::default() },
            WebAppCfg { scan_threshold: 12, ..Default::default() },
            WebAppCfg { scan_cost: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn levels_cover_the_day() {
        let cfg = WebAppCfg::default();
        let levels: std::collections::BTreeSet<i64> = (0..=cfg.horizon).map(|t| cfg.level_at(t)).collect();
        assert_eq!(levels.len(), cfg.cost_levels as usize);
    }
}
