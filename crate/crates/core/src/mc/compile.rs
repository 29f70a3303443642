//! Lowering of a (possibly parametric) model into slot-indexed form.
//!
//! Bound constants are folded away. Unbound constants become parameter
//! slots, so a parametric model is compiled once and built for many
//! parameter vectors without touching the AST again.

use std::collections::HashMap;

use parley_prism::value::{binary, EvalError};
use parley_prism::{BinOp, ConstKind, Expr, Func, Model, Span, UnaryOp, Value, VarType};
use sha2::{Digest, Sha256};

use super::McError;

#[derive(Debug, Clone)]
pub enum CExpr {
    Lit(Value),
    Int(u16),
    Bool(u16),
    Param(u16),
    ToDouble(Box<CExpr>),
    Not(Box<CExpr>),
    Neg(Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
    /// `slot = value`, the most common guard atom.
    EqSlot(u16, i64),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    Call(Func, Vec<CExpr>),
}

impl CExpr {
    pub fn eval(&self, state: &[i64], params: &[i64]) -> Result<Value, EvalError> {
        Ok(match self {
            CExpr::Lit(v) => *v,
            CExpr::Int(s) => Value::Int(state[*s as usize]),
            CExpr::Bool(s) => Value::Bool(state[*s as usize] != 0),
            CExpr::Param(i) => Value::Int(params[*i as usize]),
            CExpr::ToDouble(e) => match e.eval(state, params)? {
                Value::Int(v) => Value::Double(v as f64),
                v => v,
            },
            CExpr::EqSlot(s, v) => Value::Bool(state[*s as usize] == *v),
            CExpr::Not(e) => Value::Bool(!e.eval_bool(state, params)?),
            CExpr::Neg(e) => match e.eval(state, params)? {
                Value::Int(v) => Value::Int(v.checked_neg().ok_or(EvalError::Overflow)?),
                Value::Double(v) => Value::Double(-v),
                Value::Bool(_) => return Err(EvalError::Type("`-` applied to bool".into())),
            },
            CExpr::And(es) => {
                for e in es {
                    if !e.eval_bool(state, params)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            CExpr::Or(es) => {
                for e in es {
                    if e.eval_bool(state, params)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            CExpr::Bin(op, l, r) => binary(*op, l.eval(state, params)?, r.eval(state, params)?)?,
            CExpr::Call(func, args) => {
                let mut acc = args[0].eval(state, params)?;
                for a in &args[1..] {
                    let v = a.eval(state, params)?;
                    let pick_right = match func {
                        Func::Min => binary(BinOp::Lt, v, acc)?,
                        Func::Max => binary(BinOp::Gt, v, acc)?,
                    };
                    let mixed = matches!(acc, Value::Double(_)) || matches!(v, Value::Double(_));
                    acc = if pick_right == Value::Bool(true) { v } else { acc };
                    if mixed {
                        acc = Value::Double(acc.as_f64().unwrap_or(f64::NAN));
                    }
                }
                acc
            }
        })
    }

    pub fn eval_bool(&self, state: &[i64], params: &[i64]) -> Result<bool, EvalError> {
        match self {
            CExpr::EqSlot(s, v) => Ok(state[*s as usize] == *v),
            CExpr::Bool(s) => Ok(state[*s as usize] != 0),
            _ => self
                .eval(state, params)?
                .as_bool()
                .ok_or_else(|| EvalError::Type("expected a boolean".into())),
        }
    }

    pub fn eval_int(&self, state: &[i64], params: &[i64]) -> Result<i64, EvalError> {
        match self {
            CExpr::Int(s) => Ok(state[*s as usize]),
            CExpr::Lit(Value::Int(v)) => Ok(*v),
            _ => match self.eval(state, params)? {
                Value::Int(v) => Ok(v),
                Value::Bool(b) => Ok(b as i64),
                Value::Double(d) => Err(EvalError::Type(format!("expected an integer, found {d}"))),
            },
        }
    }

    pub fn eval_f64(&self, state: &[i64], params: &[i64]) -> Result<f64, EvalError> {
        match self {
            CExpr::Lit(Value::Double(d)) => Ok(*d),
            _ => self
                .eval(state, params)?
                .as_f64()
                .ok_or_else(|| EvalError::Type("expected a number".into())),
        }
    }

    fn is_const(&self) -> bool {
        matches!(self, CExpr::Lit(_))
    }

    /// Conjuncts of a guard, flattening nested `&`.
    fn conjuncts(&self) -> Vec<&CExpr> {
        match self {
            CExpr::And(es) => es.iter().flat_map(|e| e.conjuncts()).collect(),
            e => vec![e],
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub module: usize,
    pub lo: i64,
    pub hi: i64,
    pub is_bool: bool,
    pub init: CExpr,
}

#[derive(Debug, Clone)]
pub struct CUpdate {
    pub prob: CExpr,
    pub assigns: Vec<(u16, CExpr)>,
}

#[derive(Debug, Clone)]
pub struct CCommand {
    /// Index into `CompiledModel::actions`; `None` for a private command.
    pub action: Option<u32>,
    pub guard: CExpr,
    pub updates: Vec<CUpdate>,
    pub span: Span,
}

/// Commands of one module, bucketed by the value of a frequently tested
/// variable so that only plausible guards are evaluated.
#[derive(Debug, Clone)]
pub struct CModule {
    pub name: String,
    pub commands: Vec<CCommand>,
    index_slot: Option<u16>,
    index_lo: i64,
    buckets: Vec<Vec<u32>>,
    unindexed: Vec<u32>,
}

impl CModule {
    /// Indices of commands whose guard might hold in `state`, ascending.
    pub fn candidates<'a>(&'a self, state: &[i64]) -> impl Iterator<Item = u32> + 'a {
        let bucket: &[u32] = match self.index_slot {
            Some(slot) => {
                let off = state[slot as usize] - self.index_lo;
                self.buckets.get(off as usize).map(Vec::as_slice).unwrap_or(&[])
            }
            None => &[],
        };
        merge_sorted(bucket, &self.unindexed)
    }
}

fn merge_sorted<'a>(a: &'a [u32], b: &'a [u32]) -> impl Iterator<Item = u32> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || match (a.get(i), b.get(j)) {
        (Some(&x), Some(&y)) if x < y => {
            i += 1;
            Some(x)
        }
        (_, Some(&y)) => {
            j += 1;
            Some(y)
        }
        (Some(&x), None) => {
            i += 1;
            Some(x)
        }
        (None, None) => None,
    })
}

#[derive(Debug, Clone)]
pub struct CRewardItem {
    pub action: Option<u32>,
    pub guard: CExpr,
    pub value: CExpr,
}

#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub vars: Vec<VarInfo>,
    pub params: Vec<String>,
    pub modules: Vec<CModule>,
    pub actions: Vec<String>,
    /// For each labelled action, the modules that declare it.
    pub action_modules: Vec<Vec<usize>>,
    pub labels: Vec<(String, CExpr)>,
    pub rewards: Vec<(String, Vec<CRewardItem>)>,
    /// SHA-256 of the printed source model.
    pub hash: [u8; 32],
}

impl CompiledModel {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }
}

pub fn model_hash(model: &Model) -> [u8; 32] {
    Sha256::digest(parley_prism::print(model).as_bytes()).into()
}

pub fn compile(model: &Model) -> Result<CompiledModel, McError> {
    let params: Vec<String> = model.unbound_constants().map(|c| c.name.clone()).collect();
    let mut cx = Lower {
        model,
        params: &params,
        slots: HashMap::new(),
        depth: 0,
    };
    for (i, (_, v)) in model.variables().enumerate() {
        cx.slots.insert(v.name.as_str(), (i as u16, matches!(v.ty, VarType::Bool)));
    }

    let mut vars = Vec::new();
    for (mi, m) in model.modules.iter().enumerate() {
        for v in &m.variables {
            let (lo, hi, is_bool) = match &v.ty {
                VarType::Bool => (0, 1, true),
                VarType::Range { lo, hi } => {
                    let lo = cx.const_int(lo, &v.name)?;
                    let hi = cx.const_int(hi, &v.name)?;
                    if lo > hi {
                        return Err(McError::Model(format!("empty range for variable `{}`", v.name)));
                    }
                    (lo, hi, false)
                }
            };
            let init = match &v.init {
                Some(e) => cx.lower(e)?,
                None => CExpr::Lit(if is_bool { Value::Bool(false) } else { Value::Int(lo) }),
            };
            vars.push(VarInfo {
                name: v.name.clone(),
                module: mi,
                lo,
                hi,
                is_bool,
                init,
            });
        }
    }

    let actions = model.action_labels();
    let action_id: HashMap<&str, u32> = actions.iter().enumerate().map(|(i, a)| (a.as_str(), i as u32)).collect();
    let mut action_modules = vec![Vec::new(); actions.len()];
    let mut modules = Vec::new();
    for (mi, m) in model.modules.iter().enumerate() {
        let mut commands = Vec::new();
        for c in &m.commands {
            let action = c.action.as_deref().map(|a| action_id[a]);
            if let Some(a) = action {
                if action_modules[a as usize].last() != Some(&mi) {
                    action_modules[a as usize].push(mi);
                }
            }
            let mut updates = Vec::new();
            for u in &c.updates {
                let mut assigns = Vec::new();
                for a in &u.assignments {
                    let (slot, _) = *cx
                        .slots
                        .get(a.var.as_str())
                        .ok_or_else(|| McError::Model(format!("{}: unknown variable `{}`", a.span, a.var)))?;
                    assigns.push((slot, cx.lower(&a.value)?));
                }
                updates.push(CUpdate {
                    prob: cx.lower(&u.prob)?,
                    assigns,
                });
            }
            commands.push(CCommand {
                action,
                guard: cx.lower(&c.guard)?,
                updates,
                span: c.span,
            });
        }
        modules.push(index_module(m.name.clone(), commands, &vars));
    }

    let labels = model
        .labels
        .iter()
        .map(|l| Ok((l.name.clone(), cx.lower(&l.expr)?)))
        .collect::<Result<Vec<_>, McError>>()?;

    let mut rewards = Vec::new();
    for r in &model.rewards {
        let mut items = Vec::new();
        for item in &r.items {
            let action = match &item.action {
                Some(a) => match action_id.get(a.as_str()) {
                    Some(id) => Some(*id),
                    // Rewards on actions no command uses can never be collected.
                    None => continue,
                },
                None => None,
            };
            items.push(CRewardItem {
                action,
                guard: cx.lower(&item.guard)?,
                value: cx.lower(&item.value)?,
            });
        }
        rewards.push((r.name.clone(), items));
    }

    Ok(CompiledModel {
        vars,
        params,
        modules,
        actions,
        action_modules,
        labels,
        rewards,
        hash: model_hash(model),
    })
}

fn index_module(name: String, commands: Vec<CCommand>, vars: &[VarInfo]) -> CModule {
    let mut counts: HashMap<u16, usize> = HashMap::new();
    for c in &commands {
        for atom in c.guard.conjuncts() {
            if let CExpr::EqSlot(s, _) = atom {
                *counts.entry(*s).or_default() += 1;
            }
        }
    }
    let best = counts
        .into_iter()
        .filter(|&(_, n)| n >= 4)
        .max_by_key(|&(s, n)| (n, std::cmp::Reverse(s)))
        .map(|(s, _)| s);
    let Some(slot) = best else {
        let unindexed = (0..commands.len() as u32).collect();
        return CModule {
            name,
            commands,
            index_slot: None,
            index_lo: 0,
            buckets: Vec::new(),
            unindexed,
        };
    };
    let var = &vars[slot as usize];
    let mut buckets = vec![Vec::new(); (var.hi - var.lo + 1) as usize];
    let mut unindexed = Vec::new();
    for (i, c) in commands.iter().enumerate() {
        let key = c.guard.conjuncts().into_iter().find_map(|a| match a {
            CExpr::EqSlot(s, v) if *s == slot => Some(*v),
            _ => None,
        });
        match key {
            Some(v) if (var.lo..=var.hi).contains(&v) => buckets[(v - var.lo) as usize].push(i as u32),
            // Guard demands a value outside the range: never enabled.
            Some(_) => {}
            None => unindexed.push(i as u32),
        }
    }
    CModule {
        name,
        commands,
        index_slot: Some(slot),
        index_lo: var.lo,
        buckets,
        unindexed,
    }
}

struct Lower<'m> {
    model: &'m Model,
    params: &'m [String],
    slots: HashMap<&'m str, (u16, bool)>,
    depth: usize,
}

impl Lower<'_> {
    fn const_int(&mut self, e: &Expr, var: &str) -> Result<i64, McError> {
        match self.lower(e)? {
            CExpr::Lit(Value::Int(v)) => Ok(v),
            _ => Err(McError::Model(format!(
                "range bound of `{var}` must be a constant integer expression"
            ))),
        }
    }

    fn lower(&mut self, e: &Expr) -> Result<CExpr, McError> {
        let out = match e {
            Expr::Int(v) => CExpr::Lit(Value::Int(*v)),
            Expr::Double(v) => CExpr::Lit(Value::Double(*v)),
            Expr::Bool(b) => CExpr::Lit(Value::Bool(*b)),
            Expr::Ident(name) => {
                if let Some(&(slot, is_bool)) = self.slots.get(name.as_str()) {
                    return Ok(if is_bool { CExpr::Bool(slot) } else { CExpr::Int(slot) });
                }
                if let Some(i) = self.params.iter().position(|p| p == name) {
                    return Ok(CExpr::Param(i as u16));
                }
                let decl = self
                    .model
                    .constant(name)
                    .ok_or_else(|| McError::Model(format!("unresolved name `{name}`")))?;
                let value = decl.value.as_ref().expect("unbound constants are parameters");
                self.depth += 1;
                if self.depth > 64 {
                    return Err(McError::Model(format!("constant `{name}` is defined cyclically")));
                }
                let lowered = self.lower(value)?;
                self.depth -= 1;
                match (decl.kind, lowered) {
                    (ConstKind::Double, CExpr::Lit(Value::Int(v))) => CExpr::Lit(Value::Double(v as f64)),
                    (ConstKind::Double, e @ CExpr::Lit(_)) => e,
                    (ConstKind::Double, e) => CExpr::ToDouble(Box::new(e)),
                    (ConstKind::Int, e) => e,
                }
            }
            Expr::Unary(UnaryOp::Not, inner) => CExpr::Not(Box::new(self.lower(inner)?)),
            Expr::Unary(UnaryOp::Neg, inner) => CExpr::Neg(Box::new(self.lower(inner)?)),
            Expr::Binary(BinOp::And, ..) | Expr::Binary(BinOp::Or, ..) => {
                let Expr::Binary(op, ..) = e else { unreachable!() };
                let mut parts = Vec::new();
                self.flatten(e, *op, &mut parts)?;
                let mut kept = Vec::new();
                for p in parts {
                    match (op, &p) {
                        (BinOp::And, CExpr::Lit(Value::Bool(true))) | (BinOp::Or, CExpr::Lit(Value::Bool(false))) => {}
                        (BinOp::And, CExpr::Lit(Value::Bool(false))) => return Ok(CExpr::Lit(Value::Bool(false))),
                        (BinOp::Or, CExpr::Lit(Value::Bool(true))) => return Ok(CExpr::Lit(Value::Bool(true))),
                        _ => kept.push(p),
                    }
                }
                match kept.len() {
                    0 => CExpr::Lit(Value::Bool(*op == BinOp::And)),
                    1 => kept.pop().unwrap(),
                    _ if *op == BinOp::And => CExpr::And(kept),
                    _ => CExpr::Or(kept),
                }
            }
            Expr::Binary(op, l, r) => {
                let (l, r) = (self.lower(l)?, self.lower(r)?);
                match (op, &l, &r) {
                    (BinOp::Eq, CExpr::Int(s), CExpr::Lit(Value::Int(v)))
                    | (BinOp::Eq, CExpr::Lit(Value::Int(v)), CExpr::Int(s)) => CExpr::EqSlot(*s, *v),
                    _ => CExpr::Bin(*op, Box::new(l), Box::new(r)),
                }
            }
            Expr::Call(func, args) => CExpr::Call(*func, args.iter().map(|a| self.lower(a)).collect::<Result<_, _>>()?),
        };
        Ok(fold(out))
    }

    fn flatten(&mut self, e: &Expr, op: BinOp, out: &mut Vec<CExpr>) -> Result<(), McError> {
        match e {
            Expr::Binary(o, l, r) if *o == op => {
                self.flatten(l, op, out)?;
                self.flatten(r, op, out)
            }
            _ => {
                out.push(self.lower(e)?);
                Ok(())
            }
        }
    }
}

/// Evaluates nodes whose operands are all literals.
fn fold(e: CExpr) -> CExpr {
    let constant = match &e {
        CExpr::Lit(_) => return e,
        CExpr::Not(x) | CExpr::Neg(x) | CExpr::ToDouble(x) => x.is_const(),
        CExpr::Bin(_, l, r) => l.is_const() && r.is_const(),
        CExpr::Call(_, args) => args.iter().all(CExpr::is_const),
        _ => false,
    };
    if constant {
        if let Ok(v) = e.eval(&[], &[]) {
            return CExpr::Lit(v);
        }
    }
    e
}
