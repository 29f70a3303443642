//! Rewrites a DTMC into a parametric DTMC in which an uncertainty reduction
//! controller sets the controlled constant from observable variables.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use parley_prism::value::constant_values;
use parley_prism::{
    bind_constants, Assignment, Command, ConstDecl, ConstKind, Expr, Model, ModuleDef, Span, Update, Value,
    VarDecl, VarType,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const URC_MODULE: &str = "Uncertainty_Reduction_Controller";
pub const TURN_VAR: &str = "turn";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub pre_labels: Vec<String>,
    pub post_labels: Vec<String>,
    pub decision_vars: Vec<String>,
    pub controlled_constant: String,
    /// Inclusive range of the controlled variable.
    pub c_range: (i64, i64),
    pub ground_truth_modules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("action label `{0}` is not used by any command")]
    MissingLabel(String),
    #[error("{0} labels must not be empty")]
    NoLabels(&'static str),
    #[error("action label `{0}` is both a pre and a post label")]
    OverlappingLabel(String),
    #[error("decision variable `{var}` belongs to ground-truth module `{module}`")]
    GroundTruthLeak { var: String, module: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not a bound integer constant")]
    NotControllable(String),
    #[error("range error: {0}")]
    RangeError(String),
    #[error("name `{0}` is already declared")]
    NameClash(String),
    #[error("policy has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("parameter `{0}` is not assigned to any variable, so its range is unknown")]
    UnrangedParameter(String),
    #[error("invalid model: {0}")]
    Model(String),
}

/// One value per decision parameter, in [`enumerate_params`] order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Policy(pub Vec<i64>);

impl Policy {
    pub fn uniform(len: usize, value: i64) -> Self {
        Policy(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl ParamInfo {
    pub fn size(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }
}

fn int_value(consts: &std::collections::HashMap<String, Value>, e: &Expr) -> Option<i64> {
    parley_prism::eval(e, &|n: &str| consts.get(n).copied()).ok().and_then(|v| match v {
        Value::Int(i) => Some(i),
        Value::Bool(b) => Some(b as i64),
        Value::Double(_) => None,
    })
}

fn domain(consts: &std::collections::HashMap<String, Value>, v: &VarDecl) -> Result<(i64, i64), AugmentError> {
    match &v.ty {
        VarType::Bool => Ok((0, 1)),
        VarType::Range { lo, hi } => match (int_value(consts, lo), int_value(consts, hi)) {
            (Some(l), Some(h)) if l <= h => Ok((l, h)),
            _ => Err(AugmentError::RangeError(format!("variable `{}` has no constant, non-empty range", v.name))),
        },
    }
}

/// `x=v`, or `x` / `!x` for booleans.
fn var_is(name: &str, is_bool: bool, v: i64) -> Expr {
    match (is_bool, v) {
        (true, 0) => Expr::ident(name).not(),
        (true, _) => Expr::ident(name),
        (false, _) => Expr::ident(name).eq(Expr::int(v)),
    }
}

fn name_part(v: i64) -> String {
    if v < 0 {
        format!("m{}", -v)
    } else {
        v.to_string()
    }
}

/// Name of the parameter deciding for the given decision-variable values.
pub fn decision_name(values: &[i64]) -> String {
    let mut s = String::from("decision");
    for v in values {
        s.push('_');
        s.push_str(&name_part(*v));
    }
    s
}

/// All valuations of the given domains, first variable most significant.
fn valuations(domains: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in domains {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn augment(model: &Model, spec: &AugmentSpec) -> Result<Model, AugmentError> {
    let consts = constant_values(model).map_err(|e| AugmentError::Model(e.to_string()))?;

    let c = model
        .constant(&spec.controlled_constant)
        .filter(|c| c.kind == ConstKind::Int && c.value.is_some())
        .ok_or_else(|| AugmentError::NotControllable(spec.controlled_constant.clone()))?;
    let (c_lo, c_hi) = spec.c_range;
    if c_lo > c_hi {
        return Err(AugmentError::RangeError(format!("empty range [{c_lo}..{c_hi}] for `{}`", c.name)));
    }

    if spec.pre_labels.is_empty() {
        return Err(AugmentError::NoLabels("pre"));
    }
    if spec.post_labels.is_empty() {
        return Err(AugmentError::NoLabels("post"));
    }
    let used = model.action_labels();
    for l in spec.pre_labels.iter().chain(&spec.post_labels) {
        if !used.contains(l) {
            return Err(AugmentError::MissingLabel(l.clone()));
        }
    }
    if let Some(l) = spec.pre_labels.iter().find(|l| spec.post_labels.contains(l)) {
        return Err(AugmentError::OverlappingLabel(l.clone()));
    }

    let mut decision = Vec::new();
    for name in &spec.decision_vars {
        let (owner, var) = model
            .variable(name)
            .ok_or_else(|| AugmentError::UnknownVariable(name.clone()))?;
        if spec.ground_truth_modules.contains(&owner.name) {
            return Err(AugmentError::GroundTruthLeak {
                var: name.clone(),
                module: owner.name.clone(),
            });
        }
        let (lo, hi) = domain(&consts, var)?;
        let init = match &var.init {
            Some(e) => int_value(&consts, e)
                .ok_or_else(|| AugmentError::RangeError(format!("initial value of `{name}` is not constant")))?,
            None => lo,
        };
        decision.push((var.name.clone(), matches!(var.ty, VarType::Bool), (lo, hi), init));
    }

    let vals = valuations(&decision.iter().map(|d| d.2).collect::<Vec<_>>());
    let names: Vec<String> = vals.iter().map(|v| decision_name(v)).collect();

    let mut taken: HashSet<&str> = model.constants.iter().map(|c| c.name.as_str()).collect();
    taken.remove(spec.controlled_constant.as_str());
    taken.extend(model.modules.iter().map(|m| m.name.as_str()));
    taken.extend(model.variables().map(|(_, v)| v.name.as_str()));
    for n in names.iter().map(String::as_str).chain([URC_MODULE, TURN_VAR]) {
        if taken.contains(n) {
            return Err(AugmentError::NameClash(n.to_string()));
        }
    }

    let mut out = model.clone();
    out.constants.retain(|k| k.name != spec.controlled_constant);
    for n in &names {
        out.constants.push(ConstDecl {
            name: n.clone(),
            kind: ConstKind::Int,
            value: None,
            span: Span::default(),
        });
    }

    let turn = Expr::ident(TURN_VAR);
    let set_turn = |v: i64| Assignment {
        var: TURN_VAR.into(),
        value: Expr::int(v),
        span: Span::default(),
    };
    let command = |action: Option<&str>, guard: Expr, assignments: Vec<Assignment>| Command {
        action: action.map(String::from),
        guard,
        updates: vec![Update {
            prob: Expr::Double(1.0),
            assignments,
        }],
        span: Span::default(),
    };

    let init_vals: Vec<i64> = decision.iter().map(|d| d.3).collect();
    let mut urc = ModuleDef::new(URC_MODULE);
    urc.variables.push(VarDecl {
        name: spec.controlled_constant.clone(),
        ty: VarType::Range {
            lo: Expr::int(c_lo),
            hi: Expr::int(c_hi),
        },
        init: Some(Expr::ident(decision_name(&init_vals))),
        span: Span::default(),
    });
    urc.variables.push(VarDecl {
        name: TURN_VAR.into(),
        ty: VarType::Range {
            lo: Expr::int(1),
            hi: Expr::int(3),
        },
        init: Some(Expr::int(1)),
        span: Span::default(),
    });
    for l in &spec.pre_labels {
        urc.commands.push(command(Some(l), turn.clone().eq(Expr::int(1)), vec![set_turn(2)]));
    }
    for (v, name) in vals.iter().zip(&names) {
        let guard = Expr::all(
            std::iter::once(turn.clone().eq(Expr::int(2))).chain(
                decision.iter().zip(v).map(|(d, &x)| var_is(&d.0, d.1, x)),
            ),
        );
        let assign = Assignment {
            var: spec.controlled_constant.clone(),
            value: Expr::ident(name),
            span: Span::default(),
        };
        urc.commands.push(command(None, guard, vec![assign, set_turn(3)]));
    }
    for l in &spec.post_labels {
        urc.commands.push(command(Some(l), turn.clone().eq(Expr::int(3)), vec![set_turn(1)]));
    }
    out.modules.push(urc);
    Ok(out)
}

/// Unbound constants in declaration order, each with the range of the
/// variable it is assigned to.
pub fn enumerate_params(model: &Model) -> Result<Vec<ParamInfo>, AugmentError> {
    let consts = constant_values(model).map_err(|e| AugmentError::Model(e.to_string()))?;
    let mut ranges: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
    for (_, v) in model.variables() {
        let is_param = |e: &Expr| matches!(e, Expr::Ident(n) if model.constant(n).is_some_and(|c| c.value.is_none()));
        let targets = |n: &str| n == v.name;
        let mut sources: Vec<&Expr> = v.init.iter().filter(|e| is_param(e)).collect();
        for m in &model.modules {
            for c in &m.commands {
                for u in &c.updates {
                    sources.extend(u.assignments.iter().filter(|a| targets(&a.var) && is_param(&a.value)).map(|a| &a.value));
                }
            }
        }
        if sources.is_empty() {
            continue;
        }
        let dom = domain(&consts, v)?;
        for e in sources {
            if let Expr::Ident(n) = e {
                ranges.entry(n).or_insert(dom);
            }
        }
    }
    model
        .unbound_constants()
        .map(|c| {
            let (lo, hi) = *ranges
                .get(c.name.as_str())
                .ok_or_else(|| AugmentError::UnrangedParameter(c.name.clone()))?;
            Ok(ParamInfo {
                name: c.name.clone(),
                lo,
                hi,
            })
        })
        .collect()
}

pub fn check_policy(params: &[ParamInfo], policy: &Policy) -> Result<(), AugmentError> {
    if policy.len() != params.len() {
        return Err(AugmentError::LengthMismatch {
            expected: params.len(),
            found: policy.len(),
        });
    }
    for (p, &v) in params.iter().zip(&policy.0) {
        if v < p.lo || v > p.hi {
            return Err(AugmentError::RangeError(format!(
                "{} = {v} is outside [{}..{}]",
                p.name, p.lo, p.hi
            )));
        }
    }
    Ok(())
}

/// Binds every decision parameter to the policy's value.
pub fn instantiate(model: &Model, policy: &Policy) -> Result<Model, AugmentError> {
    let params = enumerate_params(model)?;
    check_policy(&params, policy)?;
    let bindings = params
        .iter()
        .zip(&policy.0)
        .map(|(p, &v)| (p.name.clone(), Value::Int(v)))
        .collect();
    bind_constants(model, &bindings).map_err(|e| AugmentError::Model(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use parley_prism::{parse, typecheck};

    const SRC: &str = "dtmc const int c = 2;
        module Truth x:[0..2] init 0; [move] true -> (x'=min(x+1,2)); endmodule
        module K xhat:[0..2] init 0; ready:bool init true; step:[1..3] init 1;
          [move] ready -> (xhat'=min(xhat+1,2)) & (ready'=false);
          [loc] !ready & step>=c -> (xhat'=x) & (step'=1) & (ready'=true);
          [skip] !ready & step<c -> (step'=step+1) & (ready'=true);
        endmodule";

    fn spec() -> AugmentSpec {
        AugmentSpec {
            pre_labels: vec!["move".into()],
            post_labels: vec!["loc".into(), "skip".into()],
            decision_vars: vec!["xhat".into(), "ready".into()],
            controlled_constant: "c".into(),
            c_range: (1, 3),
            ground_truth_modules: vec!["Truth".into()],
        }
    }

    #[test]
    fn structure() {
        let m = parse(SRC).unwrap();
        let a = augment(&m, &spec()).unwrap();
        assert!(typecheck(&a).is_empty(), "{:?}", typecheck(&a));
        assert!(a.constant("c").is_none());
        let params = enumerate_params(&a).unwrap();
        let names: Vec<_> = params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["decision_0_0", "decision_0_1", "decision_1_0", "decision_1_1", "decision_2_0", "decision_2_1"]);
        assert!(params.iter().all(|p| (p.lo, p.hi) == (1, 3)));
        let urc = a.module(URC_MODULE).unwrap();
        assert_eq!(urc.variables[0].init, Some(Expr::ident("decision_0_1")));
        assert_eq!(urc.commands.len(), 1 + 6 + 2);
        assert_eq!(urc.commands[1].action, None);
        // Existing modules are untouched.
        assert_eq!(&a.modules[..2], &m.modules[..]);
    }

    #[test]
    fn errors() {
        let m = parse(SRC).unwrap();
        let mut s = spec();
        s.decision_vars = vec!["x".into()];
        assert!(matches!(augment(&m, &s), Err(AugmentError::GroundTruthLeak { .. })));
        let mut s = spec();
        s.pre_labels = vec!["jump".into()];
        assert_eq!(augment(&m, &s), Err(AugmentError::MissingLabel("jump".into())));
        let mut s = spec();
        s.c_range = (3, 1);
        assert!(matches!(augment(&m, &s), Err(AugmentError::RangeError(_))));
        let mut s = spec();
        s.post_labels.push("move".into());
        assert!(matches!(augment(&m, &s), Err(AugmentError::OverlappingLabel(_))));
        let mut s = spec();
        s.controlled_constant = "nope".into();
        assert!(matches!(augment(&m, &s), Err(AugmentError::NotControllable(_))));
    }

    #[test]
    fn instantiate_binds_everything() {
        let a = augment(&parse(SRC).unwrap(), &spec()).unwrap();
        let inst = instantiate(&a, &Policy::uniform(6, 2)).unwrap();
        assert!(enumerate_params(&inst).unwrap().is_empty());
        assert!(!inst.is_parametric());
        assert!(matches!(
            instantiate(&a, &Policy::uniform(5, 2)),
            Err(AugmentError::LengthMismatch { expected: 6, found: 5 })
        ));
        assert!(matches!(instantiate(&a, &Policy::uniform(6, 4)), Err(AugmentError::RangeError(_))));
    }

    #[test]
    fn non_parametric_model_has_no_params() {
        assert!(enumerate_params(&parse(SRC).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn printed_augmented_model_reparses() {
        let a = augment(&parse(SRC).unwrap(), &spec()).unwrap();
        let text = parley_prism::print(&a);
        assert!(text.contains("const int decision_0_0;\n"));
        assert!(text.contains("[] turn=2 & xhat=0 & !ready -> (c'=decision_0_0) & (turn'=3);"));
        assert_eq!(parse(&text).unwrap(), a);
    }
}
