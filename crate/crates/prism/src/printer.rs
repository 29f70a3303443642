//! Pretty-printer. The output reparses to a structurally equal AST.

use std::fmt::{self, Write};

use crate::ast::*;

pub fn print(model: &Model) -> String {
    model.to_string()
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Dtmc => writeln!(f, "dtmc")?,
        }
        if !self.constants.is_empty() {
            writeln!(f)?;
        }
        for c in &self.constants {
            write!(f, "const {} {}", c.kind, c.name)?;
            if let Some(v) = &c.value {
                write!(f, " = {v}")?;
            }
            writeln!(f, ";")?;
        }
        for m in &self.modules {
            writeln!(f)?;
            write!(f, "{m}")?;
        }
        if !self.labels.is_empty() {
            writeln!(f)?;
        }
        for l in &self.labels {
            writeln!(f, "label \"{}\" = {};", l.name, l.expr)?;
        }
        for r in &self.rewards {
            writeln!(f)?;
            writeln!(f, "rewards \"{}\"", r.name)?;
            for item in &r.items {
                writeln!(
                    f,
                    "  [{}] {} : {};",
                    item.action.as_deref().unwrap_or(""),
                    item.guard,
                    item.value
                )?;
            }
            writeln!(f, "endrewards")?;
        }
        Ok(())
    }
}

impl fmt::Display for ModuleDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "module {}", self.name)?;
        for v in &self.variables {
            write!(f, "  {} : ", v.name)?;
            match &v.ty {
                VarType::Range { lo, hi } => write!(f, "[{lo}..{hi}]")?,
                VarType::Bool => f.write_str("bool")?,
            }
            if let Some(init) = &v.init {
                write!(f, " init {init}")?;
            }
            writeln!(f, ";")?;
        }
        if !self.variables.is_empty() && !self.commands.is_empty() {
            writeln!(f)?;
        }
        for c in &self.commands {
            writeln!(f, "  {c}")?;
        }
        writeln!(f, "endmodule")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} -> ", self.action.as_deref().unwrap_or(""), self.guard)?;
        match self.updates.as_slice() {
            [single] if single.prob == Expr::Double(1.0) => write_assignments(f, &single.assignments)?,
            updates => {
                for (i, u) in updates.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{} : ", u.prob)?;
                    write_assignments(f, &u.assignments)?;
                }
            }
        }
        f.write_char(';')
    }
}

fn write_assignments(f: &mut fmt::Formatter<'_>, assignments: &[Assignment]) -> fmt::Result {
    if assignments.is_empty() {
        return f.write_str("true");
    }
    for (i, a) in assignments.iter().enumerate() {
        if i > 0 {
            f.write_str(" & ")?;
        }
        write!(f, "({}'={})", a.var, a.value)?;
    }
    Ok(())
}

const ATOM: u8 = 8;
const UNARY_MINUS: u8 = 7;
const NOT: u8 = 3;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Int(v) if *v < 0 => UNARY_MINUS,
        Expr::Double(v) if v.is_sign_negative() => UNARY_MINUS,
        Expr::Int(_) | Expr::Double(_) | Expr::Bool(_) | Expr::Ident(_) | Expr::Call(..) => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => UNARY_MINUS,
        Expr::Unary(UnaryOp::Not, _) => NOT,
        Expr::Binary(op, ..) => op.precedence(),
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Double(v) => write!(f, "{v:?}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Ident(name) => f.write_str(name),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_char(')')
            }
            Expr::Unary(UnaryOp::Not, e) => {
                f.write_char('!')?;
                write_operand(f, e, precedence(e) < NOT)
            }
            Expr::Unary(UnaryOp::Neg, e) => {
                f.write_char('-')?;
                // `-3` would reparse as a literal, so keep literals bracketed.
                let literal = matches!(**e, Expr::Int(_) | Expr::Double(_));
                write_operand(f, e, literal || precedence(e) < UNARY_MINUS)
            }
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                let (lp, rp) = (precedence(lhs), precedence(rhs));
                let (left_parens, right_parens) = if op.is_relational() {
                    (lp <= p, rp <= p)
                } else {
                    (lp < p, rp <= p)
                };
                write_operand(f, lhs, left_parens)?;
                match op {
                    BinOp::And | BinOp::Or => write!(f, " {} ", op.symbol())?,
                    _ => f.write_str(op.symbol())?,
                }
                write_operand(f, rhs, right_parens)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_expr};

    fn roundtrip_expr(src: &str) {
        let e = parse_expr(src).unwrap();
        let printed = e.to_string();
        assert_eq!(parse_expr(&printed).unwrap(), e, "{src} printed as {printed}");
    }

    #[test]
    fn expression_round_trips() {
        for src in [
            "a - (b - c)",
            "(a - b) - c",
            "a / (b * c)",
            "-(3)",
            "-(-3)",
            "-x * 2",
            "2 * -3",
            "!(a | b) & c",
            "(x = 1) = (y = 2)",
            "!x = 1",
            "min(x + 1, N)",
            "1 - 3 * p",
            "a & (b & c)",
            "-(a + b)",
            "x - -0.5",
        ] {
            roundtrip_expr(src);
        }
    }

    #[test]
    fn doubles_keep_their_kind() {
        assert_eq!(Expr::Double(1.0).to_string(), "1.0");
        assert_eq!(parse_expr(&Expr::Double(1e-10).to_string()).unwrap(), Expr::Double(1e-10));
    }

    #[test]
    fn unbound_constant_has_no_initializer() {
        let m = parse("dtmc const int decision_0_0; module M x:[0..1] init 0; endmodule").unwrap();
        assert!(print(&m).contains("const int decision_0_0;\n"));
    }

    #[test]
    fn minimal_model_round_trip() {
        let src = "dtmc module M x:[0..1] init 0; [a] x=0 -> 1.0:(x'=1); endmodule";
        let m = parse(src).unwrap();
        assert_eq!(parse(&print(&m)).unwrap(), m);
    }
}
