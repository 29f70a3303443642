//! Runtime values and a reference evaluator over the AST.
//!
//! The model checker compiles expressions into its own faster form; this
//! evaluator is used for constants, static checks and as a cross-check.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::ast::{BinOp, ConstKind, Expr, Func, Model, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Double(f64),
    Bool(bool),
}

impl Value {
    pub fn ty(self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Double(_) => Type::Double,
            Value::Bool(_) => Type::Bool,
        }
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(v as f64),
            Value::Double(v) => Some(v),
            Value::Bool(_) => None,
        }
    }

    pub fn as_i64(self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn to_expr(self) -> Expr {
        match self {
            Value::Int(v) => Expr::Int(v),
            Value::Double(v) => Expr::Double(v),
            Value::Bool(b) => Expr::Bool(b),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v:?}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Double,
    Bool,
}

impl Type {
    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Double)
    }
}

impl From<ConstKind> for Type {
    fn from(k: ConstKind) -> Self {
        match k {
            ConstKind::Int => Type::Int,
            ConstKind::Double => Type::Double,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Double => f.write_str("double"),
            Type::Bool => f.write_str("bool"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unresolved name `{0}`")]
    Unresolved(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
    #[error("cyclic definition of constant `{0}`")]
    Cycle(String),
}

/// Evaluates `expr`, resolving identifiers through `lookup`.
pub fn eval(expr: &Expr, lookup: &impl Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
    Ok(match expr {
        Expr::Int(v) => Value::Int(*v),
        Expr::Double(v) => Value::Double(*v),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Ident(name) => lookup(name).ok_or_else(|| EvalError::Unresolved(name.clone()))?,
        Expr::Unary(UnaryOp::Not, e) => match eval(e, lookup)? {
            Value::Bool(b) => Value::Bool(!b),
            v => return Err(EvalError::Type(format!("`!` applied to {}", v.ty()))),
        },
        Expr::Unary(UnaryOp::Neg, e) => match eval(e, lookup)? {
            Value::Int(v) => Value::Int(v.checked_neg().ok_or(EvalError::Overflow)?),
            Value::Double(v) => Value::Double(-v),
            Value::Bool(_) => return Err(EvalError::Type("`-` applied to bool".into())),
        },
        Expr::Binary(op, l, r) => {
            let lv = eval(l, lookup)?;
            // Short-circuit so guards like `x>0 & 1/x>...` stay total.
            match (op, lv) {
                (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                _ => {}
            }
            binary(*op, lv, eval(r, lookup)?)?
        }
        Expr::Call(func, args) => {
            let mut acc = eval(&args[0], lookup)?;
            for a in &args[1..] {
                let v = eval(a, lookup)?;
                acc = match (acc, v) {
                    (Value::Int(x), Value::Int(y)) => Value::Int(match func {
                        Func::Min => x.min(y),
                        Func::Max => x.max(y),
                    }),
                    (x, y) => {
                        let (x, y) = numeric_pair(x, y, func.name())?;
                        Value::Double(match func {
                            Func::Min => x.min(y),
                            Func::Max => x.max(y),
                        })
                    }
                };
            }
            acc
        }
    })
}

fn numeric_pair(a: Value, b: Value, op: &str) -> Result<(f64, f64), EvalError> {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(EvalError::Type(format!("`{op}` applied to {} and {}", a.ty(), b.ty()))),
    }
}

pub fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    Ok(match op {
        And | Or => match (a, b) {
            (Value::Bool(x), Value::Bool(y)) => Value::Bool(if op == And { x && y } else { x || y }),
            _ => return Err(EvalError::Type(format!("`{}` applied to {} and {}", op.symbol(), a.ty(), b.ty()))),
        },
        Eq | Ne => {
            let equal = match (a, b) {
                (Value::Bool(x), Value::Bool(y)) => x == y,
                (Value::Int(x), Value::Int(y)) => x == y,
                _ => {
                    let (x, y) = numeric_pair(a, b, op.symbol())?;
                    x == y
                }
            };
            Value::Bool(if op == Eq { equal } else { !equal })
        }
        Lt | Le | Gt | Ge => {
            let ord = match (a, b) {
                (Value::Int(x), Value::Int(y)) => x.partial_cmp(&y),
                _ => {
                    let (x, y) = numeric_pair(a, b, op.symbol())?;
                    x.partial_cmp(&y)
                }
            };
            let Some(ord) = ord else { return Ok(Value::Bool(false)) };
            Value::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        Add | Sub | Mul => match (a, b) {
            (Value::Int(x), Value::Int(y)) => Value::Int(
                match op {
                    Add => x.checked_add(y),
                    Sub => x.checked_sub(y),
                    _ => x.checked_mul(y),
                }
                .ok_or(EvalError::Overflow)?,
            ),
            _ => {
                let (x, y) = numeric_pair(a, b, op.symbol())?;
                Value::Double(match op {
                    Add => x + y,
                    Sub => x - y,
                    _ => x * y,
                })
            }
        },
        Div => {
            let (x, y) = numeric_pair(a, b, "/")?;
            Value::Double(x / y)
        }
    })
}

/// Values of all bound constants, evaluated in dependency order.
/// Unbound constants are absent from the map.
pub fn constant_values(model: &Model) -> Result<HashMap<String, Value>, EvalError> {
    let decls: HashMap<&str, _> = model.constants.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut done: HashMap<String, Value> = HashMap::new();
    let mut visiting: Vec<String> = Vec::new();

    fn resolve(
        name: &str,
        decls: &HashMap<&str, &crate::ast::ConstDecl>,
        done: &mut HashMap<String, Value>,
        visiting: &mut Vec<String>,
    ) -> Result<Option<Value>, EvalError> {
        if let Some(v) = done.get(name) {
            return Ok(Some(*v));
        }
        let Some(decl) = decls.get(name) else {
            return Err(EvalError::Unresolved(name.to_string()));
        };
        let Some(expr) = &decl.value else { return Ok(None) };
        if visiting.iter().any(|v| v == name) {
            return Err(EvalError::Cycle(name.to_string()));
        }
        visiting.push(name.to_string());
        let mut deps = Vec::new();
        expr.visit_idents(&mut |id| deps.push(id.to_string()));
        let mut env = HashMap::new();
        for dep in deps {
            if let Some(v) = resolve(&dep, decls, done, visiting)? {
                env.insert(dep, v);
            }
        }
        visiting.pop();
        let v = eval(expr, &|n: &str| env.get(n).copied())?;
        let v = coerce_to_kind(v, decl.kind)
            .ok_or_else(|| EvalError::Type(format!("constant `{name}` is {} but its value is {}", decl.kind, v.ty())))?;
        done.insert(name.to_string(), v);
        Ok(Some(v))
    }

    for c in &model.constants {
        resolve(&c.name, &decls, &mut done, &mut visiting)?;
    }
    Ok(done)
}

/// Converts `v` to a constant of `kind`; ints widen to doubles, nothing narrows.
pub fn coerce_to_kind(v: Value, kind: ConstKind) -> Option<Value> {
    match (kind, v) {
        (ConstKind::Int, Value::Int(_)) => Some(v),
        (ConstKind::Double, Value::Int(x)) => Some(Value::Double(x as f64)),
        (ConstKind::Double, Value::Double(_)) => Some(v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_expr};

    fn ev(src: &str) -> Value {
        eval(&parse_expr(src).unwrap(), &|_| None).unwrap()
    }

    #[test]
    fn arithmetic_kinds() {
        assert_eq!(ev("1 + 2"), Value::Int(3));
        assert_eq!(ev("1 + 2.5"), Value::Double(3.5));
        assert_eq!(ev("3 / 2"), Value::Double(1.5));
        assert_eq!(ev("min(4, 2, 3)"), Value::Int(2));
        assert_eq!(ev("max(1, 0.5)"), Value::Double(1.0));
        assert_eq!(ev("1 - 3 * 0.01"), Value::Double(1.0 - 3.0 * 0.01));
        assert_eq!(ev("!(1 = 2) & 2 >= 2.0"), Value::Bool(true));
    }

    #[test]
    fn constants_resolve_out_of_order() {
        let m = parse("dtmc const double q = 1 - p; const double p = 0.25; const int k;").unwrap();
        let vals = constant_values(&m).unwrap();
        assert_eq!(vals["q"], Value::Double(0.75));
        assert!(!vals.contains_key("k"));
    }

    #[test]
    fn cyclic_constants_are_rejected() {
        let m = parse("dtmc const int a = b; const int b = a;").unwrap();
        assert!(matches!(constant_values(&m), Err(EvalError::Cycle(_))));
    }
}
