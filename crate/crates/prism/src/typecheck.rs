//! Static checks over a parsed model. Problems are reported as diagnostics
//! sorted by source position; nothing here fails.

use std::collections::{HashMap, HashSet};

use crate::ast::*;
use crate::error::{Diagnostic, DiagnosticKind, Severity};
use crate::value::{self, constant_values, eval, Type, Value};

const PROB_TOLERANCE: f64 = 1e-9;

pub fn typecheck(model: &Model) -> Vec<Diagnostic> {
    let mut cx = Checker::new(model);
    cx.run();
    let mut diags = cx.diags;
    diags.sort_by(|a, b| {
        (a.span.line, a.span.col, &a.message).cmp(&(b.span.line, b.span.col, &b.message))
    });
    diags
}

/// True when `typecheck` reports no errors (warnings are allowed).
pub fn is_well_formed(model: &Model) -> bool {
    typecheck(model).iter().all(|d| d.severity != Severity::Error)
}

#[derive(Clone, Copy)]
enum Symbol {
    Const(ConstKind),
    Var(Type),
}

struct Checker<'m> {
    model: &'m Model,
    symbols: HashMap<&'m str, Symbol>,
    /// Values of bound constants; empty if they could not be evaluated.
    consts: HashMap<String, Value>,
    ranges: HashMap<&'m str, (Option<i64>, Option<i64>)>,
    diags: Vec<Diagnostic>,
}

impl<'m> Checker<'m> {
    fn new(model: &'m Model) -> Self {
        Self {
            model,
            symbols: HashMap::new(),
            consts: HashMap::new(),
            ranges: HashMap::new(),
            diags: Vec::new(),
        }
    }

    fn error(&mut self, span: Span, kind: DiagnosticKind, message: impl Into<String>) {
        self.push(span, Severity::Error, kind, message);
    }

    fn push(&mut self, span: Span, severity: Severity, kind: DiagnosticKind, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            span,
            severity,
            kind,
            message: message.into(),
        });
    }

    fn run(&mut self) {
        let model = self.model;
        if model.modules.is_empty() {
            self.error(Span::new(1, 1), DiagnosticKind::NoModules, "model declares no modules");
        }
        self.declare_names();
        self.check_constants();
        for m in &model.modules {
            self.check_variables(m);
        }
        for m in &model.modules {
            for c in &m.commands {
                self.check_command(m, c);
            }
        }
        self.check_labels();
        self.check_rewards();
    }

    fn declare_names(&mut self) {
        let model = self.model;
        let mut seen: HashMap<&str, (&str, Span)> = HashMap::new();
        let mut clash = |cx: &mut Self, name: &'m str, what: &'static str, span: Span| {
            if let Some((prev, prev_span)) = seen.get(name) {
                cx.error(
                    span,
                    DiagnosticKind::NameClash,
                    format!("{what} `{name}` clashes with {prev} declared at {prev_span}"),
                );
                false
            } else {
                seen.insert(name, (what, span));
                true
            }
        };
        for c in &model.constants {
            if clash(self, &c.name, "constant", c.span) {
                self.symbols.insert(&c.name, Symbol::Const(c.kind));
            }
        }
        for m in &model.modules {
            clash(self, &m.name, "module", m.span);
        }
        for m in &model.modules {
            for v in &m.variables {
                if clash(self, &v.name, "variable", v.span) {
                    let ty = match v.ty {
                        VarType::Bool => Type::Bool,
                        VarType::Range { .. } => Type::Int,
                    };
                    self.symbols.insert(&v.name, Symbol::Var(ty));
                }
            }
        }
        let mut labels: HashSet<&str> = HashSet::new();
        for l in &model.labels {
            if !labels.insert(&l.name) {
                self.error(l.span, DiagnosticKind::NameClash, format!("label \"{}\" declared twice", l.name));
            }
        }
        let mut rewards: HashSet<&str> = HashSet::new();
        for r in &model.rewards {
            if !rewards.insert(&r.name) {
                self.error(
                    r.span,
                    DiagnosticKind::NameClash,
                    format!("reward structure \"{}\" declared twice", r.name),
                );
            }
        }
    }

    fn check_constants(&mut self) {
        let model = self.model;
        for c in &model.constants {
            match &c.value {
                None if c.kind == ConstKind::Double => self.error(
                    c.span,
                    DiagnosticKind::UnboundDouble,
                    format!("unbound constant `{}` must be int", c.name),
                ),
                None => {}
                Some(e) => {
                    if let Some(found) = self.infer(e, c.span, true) {
                        let ok = match c.kind {
                            ConstKind::Int => found == Type::Int,
                            ConstKind::Double => found.is_numeric(),
                        };
                        if !ok {
                            self.error(
                                c.span,
                                DiagnosticKind::TypeMismatch,
                                format!("constant `{}` is {} but its value is {found}", c.name, c.kind),
                            );
                        }
                    }
                }
            }
        }
        match constant_values(model) {
            Ok(v) => self.consts = v,
            Err(value::EvalError::Cycle(name)) => {
                let span = model.constant(&name).map(|c| c.span).unwrap_or_default();
                self.error(span, DiagnosticKind::UnresolvedName, format!("constant `{name}` is defined in terms of itself"));
            }
            // Already reported as a resolution or kind problem above.
            Err(_) => {}
        }
    }

    /// Evaluates `e` if it depends only on bound constants.
    fn static_value(&self, e: &Expr) -> Option<Value> {
        eval(e, &|n: &str| self.consts.get(n).copied()).ok()
    }

    fn check_variables(&mut self, m: &'m ModuleDef) {
        for v in &m.variables {
            let mut bounds = (None, None);
            if let VarType::Range { lo, hi } = &v.ty {
                for bound in [lo, hi] {
                    if let Some(t) = self.infer(bound, v.span, true) {
                        if t != Type::Int {
                            self.error(
                                v.span,
                                DiagnosticKind::TypeMismatch,
                                format!("range bound of `{}` must be int, found {t}", v.name),
                            );
                        }
                    }
                }
                bounds = (
                    self.static_value(lo).and_then(Value::as_i64),
                    self.static_value(hi).and_then(Value::as_i64),
                );
                if let (Some(l), Some(h)) = bounds {
                    if l > h {
                        self.error(
                            v.span,
                            DiagnosticKind::InvalidRange,
                            format!("empty range [{l}..{h}] for `{}`", v.name),
                        );
                        bounds = (None, None);
                    }
                }
            }
            self.ranges.insert(&v.name, bounds);
            if let Some(init) = &v.init {
                let expected = match v.ty {
                    VarType::Bool => Type::Bool,
                    VarType::Range { .. } => Type::Int,
                };
                if let Some(t) = self.infer(init, v.span, true) {
                    if t != expected {
                        self.error(
                            v.span,
                            DiagnosticKind::TypeMismatch,
                            format!("initial value of `{}` is {t}, expected {expected}", v.name),
                        );
                    }
                }
                self.check_in_range(&v.name, init, v.span, "initial value");
            }
        }
    }

    fn check_in_range(&mut self, var: &str, e: &Expr, span: Span, what: &str) {
        let Some((lo, hi)) = self.ranges.get(var).copied() else { return };
        let Some(Value::Int(x)) = self.static_value(e) else { return };
        let below = lo.is_some_and(|l| x < l);
        let above = hi.is_some_and(|h| x > h);
        if below || above {
            let show = |b: Option<i64>| b.map_or("?".to_string(), |v| v.to_string());
            self.error(
                span,
                DiagnosticKind::RangeViolation,
                format!("{what} {x} of `{var}` is outside [{}..{}]", show(lo), show(hi)),
            );
        }
    }

    fn check_command(&mut self, m: &ModuleDef, c: &Command) {
        self.expect(&c.guard, Type::Bool, c.span, "guard");
        if c.updates.is_empty() {
            self.error(c.span, DiagnosticKind::ProbabilitySum, "command has no updates");
        }
        let mut sum = Some(0.0);
        for u in &c.updates {
            if let Some(t) = self.infer(&u.prob, c.span, false) {
                if !t.is_numeric() {
                    self.error(c.span, DiagnosticKind::TypeMismatch, format!("probability must be numeric, found {t}"));
                }
            }
            match self.static_value(&u.prob).and_then(Value::as_f64) {
                Some(p) => {
                    if !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&p) {
                        self.error(
                            c.span,
                            DiagnosticKind::ProbabilitySum,
                            format!("probability {p} is outside [0, 1]"),
                        );
                    }
                    sum = sum.map(|s| s + p);
                }
                None => sum = None,
            }
            let mut assigned: HashSet<&str> = HashSet::new();
            for a in &u.assignments {
                if !assigned.insert(&a.var) {
                    self.error(a.span, DiagnosticKind::NameClash, format!("`{}` assigned twice in one update", a.var));
                }
                self.check_assignment(m, a);
            }
        }
        if let Some(s) = sum {
            if !c.updates.is_empty() && (s - 1.0).abs() > PROB_TOLERANCE {
                self.error(
                    c.span,
                    DiagnosticKind::ProbabilitySum,
                    format!("update probabilities sum to {s}, not 1"),
                );
            }
        }
    }

    fn check_assignment(&mut self, m: &ModuleDef, a: &Assignment) {
        let target = match self.symbols.get(a.var.as_str()) {
            Some(Symbol::Var(t)) => *t,
            Some(Symbol::Const(_)) => {
                self.error(a.span, DiagnosticKind::TypeMismatch, format!("cannot assign to constant `{}`", a.var));
                return;
            }
            None => {
                self.error(a.span, DiagnosticKind::UnresolvedName, format!("unknown variable `{}`", a.var));
                return;
            }
        };
        if !m.declares(&a.var) {
            let owner = self.model.variable(&a.var).map(|(o, _)| o.name.as_str()).unwrap_or("?");
            self.error(
                a.span,
                DiagnosticKind::ForeignAssignment,
                format!("module `{}` assigns `{}`, which belongs to module `{owner}`", m.name, a.var),
            );
        }
        if let Some(t) = self.infer(&a.value, a.span, false) {
            if t != target {
                self.error(
                    a.span,
                    DiagnosticKind::TypeMismatch,
                    format!("`{}` is {target} but is assigned a {t} value", a.var),
                );
            }
        }
        self.check_in_range(&a.var, &a.value, a.span, "assigned value");
    }

    fn check_labels(&mut self) {
        for l in &self.model.labels {
            self.expect(&l.expr, Type::Bool, l.span, "label");
        }
    }

    fn check_rewards(&mut self) {
        let actions = self.model.action_labels();
        for r in &self.model.rewards {
            for item in &r.items {
                self.expect(&item.guard, Type::Bool, item.span, "reward guard");
                if let Some(t) = self.infer(&item.value, item.span, false) {
                    if !t.is_numeric() {
                        self.error(item.span, DiagnosticKind::TypeMismatch, format!("reward value must be numeric, found {t}"));
                    }
                }
                if let Some(v) = self.static_value(&item.value).and_then(Value::as_f64) {
                    if v < 0.0 {
                        self.error(item.span, DiagnosticKind::NegativeReward, format!("reward value {v} is negative"));
                    }
                }
                if let Some(a) = &item.action {
                    if !actions.contains(a) {
                        self.push(
                            item.span,
                            Severity::Warning,
                            DiagnosticKind::UnresolvedName,
                            format!("reward refers to action `{a}`, which no command uses"),
                        );
                    }
                }
            }
        }
    }

    fn expect(&mut self, e: &Expr, expected: Type, span: Span, what: &str) {
        if let Some(t) = self.infer(e, span, false) {
            if t != expected {
                self.error(span, DiagnosticKind::TypeMismatch, format!("{what} must be {expected}, found {t}"));
            }
        }
    }

    /// Infers the type of `e`, reporting problems at `span`. `consts_only`
    /// restricts identifiers to constants. Returns `None` after an error.
    fn infer(&mut self, e: &Expr, span: Span, consts_only: bool) -> Option<Type> {
        use BinOp::*;
        Some(match e {
            Expr::Int(_) => Type::Int,
            Expr::Double(_) => Type::Double,
            Expr::Bool(_) => Type::Bool,
            Expr::Ident(name) => match self.symbols.get(name.as_str()) {
                Some(Symbol::Const(k)) => Type::from(*k),
                Some(Symbol::Var(t)) if !consts_only => *t,
                Some(Symbol::Var(_)) => {
                    self.error(span, DiagnosticKind::UnresolvedName, format!("`{name}` is a variable; a constant is required here"));
                    return None;
                }
                None => {
                    self.error(span, DiagnosticKind::UnresolvedName, format!("unknown identifier `{name}`"));
                    return None;
                }
            },
            Expr::Unary(UnaryOp::Not, inner) => {
                let t = self.infer(inner, span, consts_only)?;
                self.require(t == Type::Bool, span, format!("`!` needs bool, found {t}"))?;
                Type::Bool
            }
            Expr::Unary(UnaryOp::Neg, inner) => {
                let t = self.infer(inner, span, consts_only)?;
                self.require(t.is_numeric(), span, format!("`-` needs a number, found {t}"))?;
                t
            }
            Expr::Call(func, args) => {
                let mut all_int = true;
                for a in args {
                    let t = self.infer(a, span, consts_only)?;
                    self.require(t.is_numeric(), span, format!("`{}` needs numbers, found {t}", func.name()))?;
                    all_int &= t == Type::Int;
                }
                if all_int { Type::Int } else { Type::Double }
            }
            Expr::Binary(op, l, r) => {
                let lt = self.infer(l, span, consts_only);
                let rt = self.infer(r, span, consts_only);
                let (lt, rt) = (lt?, rt?);
                let sym = op.symbol();
                match op {
                    And | Or => {
                        self.require(lt == Type::Bool && rt == Type::Bool, span, format!("`{sym}` needs bool operands, found {lt} and {rt}"))?;
                        Type::Bool
                    }
                    Eq | Ne => {
                        let ok = (lt == Type::Bool) == (rt == Type::Bool);
                        self.require(ok, span, format!("cannot compare {lt} with {rt}"))?;
                        Type::Bool
                    }
                    Lt | Le | Gt | Ge => {
                        self.require(lt.is_numeric() && rt.is_numeric(), span, format!("`{sym}` needs numbers, found {lt} and {rt}"))?;
                        Type::Bool
                    }
                    Add | Sub | Mul | Div => {
                        self.require(lt.is_numeric() && rt.is_numeric(), span, format!("`{sym}` needs numbers, found {lt} and {rt}"))?;
                        if *op == Div || lt == Type::Double || rt == Type::Double {
                            Type::Double
                        } else {
                            Type::Int
                        }
                    }
                }
            }
        })
    }

    fn require(&mut self, ok: bool, span: Span, message: String) -> Option<()> {
        if ok {
            Some(())
        } else {
            self.error(span, DiagnosticKind::TypeMismatch, message);
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        typecheck(&parse(src).unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn minimal_model_is_clean() {
        assert!(kinds("dtmc module M x:[0..1] init 0; [a] x=0 -> 1.0:(x'=1); endmodule").is_empty());
    }

    #[test]
    fn literal_out_of_range() {
        assert_eq!(
            kinds("dtmc module M x:[0..1] init 0; [a] x=0 -> (x'=2); endmodule"),
            vec![DiagnosticKind::RangeViolation]
        );
    }

    #[test]
    fn duplicate_variable_across_modules() {
        let src = "dtmc module A x:[0..1] init 0; endmodule module B x:[0..1] init 0; endmodule";
        assert_eq!(kinds(src), vec![DiagnosticKind::NameClash]);
    }

    #[test]
    fn foreign_assignment() {
        let src = "dtmc module A x:[0..1] init 0; endmodule module B y:bool init false; [] true -> (x'=1); endmodule";
        assert_eq!(kinds(src), vec![DiagnosticKind::ForeignAssignment]);
    }

    #[test]
    fn probability_sum() {
        let src = "dtmc const double p = 0.3; module M x:[0..1] init 0; [] x=0 -> p:(x'=1) + 0.6:(x'=0); endmodule";
        assert_eq!(kinds(src), vec![DiagnosticKind::ProbabilitySum]);
        let ok = "dtmc const double p = 0.3; module M x:[0..1] init 0; [] x=0 -> p:(x'=1) + 1-p:(x'=0); endmodule";
        assert!(kinds(ok).is_empty());
    }

    #[test]
    fn parametric_probabilities_are_not_summed() {
        let src = "dtmc const int k; module M x:[0..3] init 0; [] x=0 -> 1/k:(x'=1) + 0.5:(x'=0); endmodule";
        assert!(kinds(src).is_empty());
    }

    #[test]
    fn kinds_and_names() {
        assert_eq!(
            kinds("dtmc module M x:[0..1] init 0; [] x -> (x'=1); endmodule"),
            vec![DiagnosticKind::TypeMismatch]
        );
        assert_eq!(
            kinds("dtmc module M x:[0..1] init 0; [] y=0 -> (x'=1); endmodule"),
            vec![DiagnosticKind::UnresolvedName]
        );
        assert_eq!(
            kinds("dtmc module M x:[0..1] init 0; [] true -> (x'=x/2); endmodule"),
            vec![DiagnosticKind::TypeMismatch]
        );
        assert_eq!(kinds("dtmc const double d;"), vec![DiagnosticKind::NoModules, DiagnosticKind::UnboundDouble]);
    }

    #[test]
    fn ranges_and_inits() {
        assert_eq!(
            kinds("dtmc module M x:[3..1] init 2; endmodule"),
            vec![DiagnosticKind::InvalidRange]
        );
        assert_eq!(
            kinds("dtmc const int N = 4; module M x:[0..N] init N+1; endmodule"),
            vec![DiagnosticKind::RangeViolation]
        );
    }

    #[test]
    fn negative_reward() {
        let src = "dtmc module M x:[0..1] init 0; [a] true -> true; endmodule rewards \"r\" [a] true : -1; endrewards";
        assert_eq!(kinds(src), vec![DiagnosticKind::NegativeReward]);
    }

    #[test]
    fn diagnostics_sorted_by_position() {
        let src = "dtmc\nmodule M\n x:[0..1] init 5;\n [] true -> (x'=7);\nendmodule";
        let d = typecheck(&parse(src).unwrap());
        assert_eq!(d.len(), 2);
        assert!(d[0].span.line < d[1].span.line);
        assert_eq!(d[0].render("m.prism"), format!("m.prism:3:2: error: {}", d[0].message));
    }
}
