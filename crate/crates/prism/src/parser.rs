//! Recursive descent parser for the supported PRISM fragment.

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{tokenize, Tok, Token};

type PResult<T> = Result<T, ParseError>;

/// Parses a model file. Comments run from `//` to end of line.
pub fn parse(src: &str) -> PResult<Model> {
    Parser::new(tokenize(src)?).model()
}

/// Parses a standalone expression (used for property targets and tooling).
pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(tokenize(src)?);
    let e = p.expr()?;
    p.expect(&Tok::Eof, "end of expression")?;
    Ok(e)
}

const UNSUPPORTED_MODEL_TYPES: &[&str] = &[
    "mdp",
    "ctmc",
    "pta",
    "smg",
    "pomdp",
    "popta",
    "nondeterministic",
    "probabilistic",
    "stochastic",
];

const UNSUPPORTED_ITEMS: &[&str] = &["formula", "global", "init", "system", "player", "observables"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Self { tokens, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::syntax(
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: &Tok, expected: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn name(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn model(&mut self) -> PResult<Model> {
        let mut model = Model::new();
        match self.peek().clone() {
            Tok::Ident(s) if s == "dtmc" => {
                self.advance();
            }
            Tok::Ident(s) if UNSUPPORTED_MODEL_TYPES.contains(&s.as_str()) => {
                return Err(ParseError::unsupported(self.span(), s));
            }
            _ => return Err(self.unexpected("model type `dtmc`")),
        }
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) => match kw.as_str() {
                    "const" => model.constants.push(self.const_decl()?),
                    "module" => model.modules.push(self.module()?),
                    "label" => model.labels.push(self.label()?),
                    "rewards" => model.rewards.push(self.rewards()?),
                    other if UNSUPPORTED_ITEMS.contains(&other) => {
                        return Err(ParseError::unsupported(span, other));
                    }
                    other if UNSUPPORTED_MODEL_TYPES.contains(&other) || other == "dtmc" => {
                        return Err(ParseError::syntax(span, "model type declared twice"));
                    }
                    _ => return Err(self.unexpected("`const`, `module`, `label` or `rewards`")),
                },
                _ => return Err(self.unexpected("`const`, `module`, `label` or `rewards`")),
            }
        }
        Ok(model)
    }

    fn const_decl(&mut self) -> PResult<ConstDecl> {
        let span = self.span();
        self.expect_keyword("const")?;
        let kind = match self.peek().clone() {
            Tok::Ident(s) if s == "int" => ConstKind::Int,
            Tok::Ident(s) if s == "double" => ConstKind::Double,
            Tok::Ident(s) if s == "bool" => {
                return Err(ParseError::unsupported(self.span(), "const bool"));
            }
            _ => return Err(self.unexpected("`int` or `double`")),
        };
        self.advance();
        let name = self.name("constant name")?;
        let value = if self.eat(&Tok::Eq) { Some(self.expr()?) } else { None };
        self.expect(&Tok::Semi, "`;`")?;
        Ok(ConstDecl { name, kind, value, span })
    }

    fn module(&mut self) -> PResult<ModuleDef> {
        let span = self.span();
        self.expect_keyword("module")?;
        let name = self.name("module name")?;
        if self.peek() == &Tok::Eq {
            return Err(ParseError::unsupported(self.span(), "module renaming"));
        }
        let mut module = ModuleDef::new(name);
        module.span = span;
        loop {
            match self.peek() {
                Tok::Ident(s) if s == "endmodule" => {
                    self.advance();
                    break;
                }
                Tok::LBracket => module.commands.push(self.command()?),
                Tok::Ident(_) => module.variables.push(self.var_decl()?),
                _ => return Err(self.unexpected("variable declaration, command or `endmodule`")),
            }
        }
        Ok(module)
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let span = self.span();
        let name = self.name("variable name")?;
        self.expect(&Tok::Colon, "`:`")?;
        let ty = match self.peek() {
            Tok::LBracket => {
                self.advance();
                let lo = self.expr()?;
                self.expect(&Tok::DotDot, "`..`")?;
                let hi = self.expr()?;
                self.expect(&Tok::RBracket, "`]`")?;
                VarType::Range { lo, hi }
            }
            Tok::Ident(s) if s == "bool" || s == "Bool" => {
                self.advance();
                VarType::Bool
            }
            Tok::Ident(s) if s == "int" || s == "double" || s == "clock" => {
                return Err(ParseError::unsupported(self.span(), format!("unbounded `{s}` variable")));
            }
            _ => return Err(self.unexpected("range `[lo..hi]` or `bool`")),
        };
        let init = if self.eat_keyword("init") { Some(self.expr()?) } else { None };
        self.expect(&Tok::Semi, "`;`")?;
        Ok(VarDecl { name, ty, init, span })
    }

    fn action_label(&mut self) -> PResult<Option<String>> {
        self.expect(&Tok::LBracket, "`[`")?;
        let action = if self.peek() == &Tok::RBracket {
            None
        } else {
            Some(self.name("action label")?)
        };
        self.expect(&Tok::RBracket, "`]`")?;
        Ok(action)
    }

    fn command(&mut self) -> PResult<Command> {
        let span = self.span();
        let action = self.action_label()?;
        let guard = self.expr()?;
        self.expect(&Tok::Arrow, "`->`")?;
        let updates = self.updates()?;
        self.expect(&Tok::Semi, "`;`")?;
        Ok(Command { action, guard, updates, span })
    }

    fn starts_assignment(&self) -> bool {
        self.peek() == &Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(_))
            && self.peek_at(2) == &Tok::Prime
    }

    fn starts_empty_update(&self) -> bool {
        self.at_keyword("true") && matches!(self.peek_at(1), Tok::Semi | Tok::Plus)
    }

    fn updates(&mut self) -> PResult<Vec<Update>> {
        if self.starts_assignment() || self.starts_empty_update() {
            let assignments = self.assignments()?;
            return Ok(vec![Update {
                prob: Expr::Double(1.0),
                assignments,
            }]);
        }
        let mut updates = Vec::new();
        loop {
            let prob = self.expr()?;
            self.expect(&Tok::Colon, "`:` after update probability")?;
            let assignments = self.assignments()?;
            updates.push(Update { prob, assignments });
            if !self.eat(&Tok::Plus) {
                break;
            }
        }
        Ok(updates)
    }

    fn assignments(&mut self) -> PResult<Vec<Assignment>> {
        if self.eat_keyword("true") {
            return Ok(Vec::new());
        }
        let mut out = vec![self.assignment()?];
        while self.eat(&Tok::Amp) {
            out.push(self.assignment()?);
        }
        Ok(out)
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        let span = self.span();
        self.expect(&Tok::LParen, "`(` starting an assignment")?;
        let var = self.name("variable name")?;
        self.expect(&Tok::Prime, "`'`")?;
        self.expect(&Tok::Eq, "`=`")?;
        let value = self.expr()?;
        self.expect(&Tok::RParen, "`)`")?;
        Ok(Assignment { var, value, span })
    }

    fn label(&mut self) -> PResult<LabelDef> {
        let span = self.span();
        self.expect_keyword("label")?;
        let name = self.string("label name string")?;
        self.expect(&Tok::Eq, "`=`")?;
        let expr = self.expr()?;
        self.expect(&Tok::Semi, "`;`")?;
        Ok(LabelDef { name, expr, span })
    }

    fn rewards(&mut self) -> PResult<RewardStruct> {
        let span = self.span();
        self.expect_keyword("rewards")?;
        let name = self.string("reward structure name")?;
        let mut items = Vec::new();
        loop {
            let item_span = self.span();
            if self.eat_keyword("endrewards") {
                break;
            }
            if self.peek() != &Tok::LBracket {
                if self.peek() == &Tok::Eof {
                    return Err(self.unexpected("`endrewards`"));
                }
                return Err(ParseError::unsupported(item_span, "state rewards"));
            }
            let action = self.action_label()?;
            let guard = self.expr()?;
            self.expect(&Tok::Colon, "`:`")?;
            let value = self.expr()?;
            self.expect(&Tok::Semi, "`;`")?;
            items.push(RewardItem {
                action,
                guard,
                value,
                span: item_span,
            });
        }
        Ok(RewardStruct { name, items, span })
    }

    // Expressions, loosest first: | & ! relational +- */ unary-minus.

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            Ok(self.not_expr()?.not())
        } else {
            self.rel_expr()
        }
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs_span = self.span();
            let rhs = self.unary_expr()?;
            if op == BinOp::Div && is_zero_literal(&rhs) {
                return Err(ParseError::syntax(rhs_span, "division by zero"));
            }
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            // `-3` is a literal; `-(3)` and `-x` are negations.
            return match self.peek().clone() {
                Tok::Int(v) => {
                    self.advance();
                    Ok(Expr::Int(-v))
                }
                Tok::Double(v) => {
                    self.advance();
                    Ok(Expr::Double(-v))
                }
                _ => Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary_expr()?))),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Double(v) => {
                self.advance();
                Ok(Expr::Double(v))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.advance();
                    Ok(Expr::Bool(true))
                }
                "false" => {
                    self.advance();
                    Ok(Expr::Bool(false))
                }
                "min" | "max" => {
                    self.advance();
                    let func = if s == "min" { Func::Min } else { Func::Max };
                    self.expect(&Tok::LParen, "`(`")?;
                    let mut args = vec![self.expr()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(&Tok::RParen, "`)`")?;
                    if args.len() < 2 {
                        return Err(ParseError::syntax(span, format!("`{s}` needs at least two arguments")));
                    }
                    Ok(Expr::Call(func, args))
                }
                "floor" | "ceil" | "pow" | "mod" | "log" | "round" => {
                    Err(ParseError::unsupported(span, format!("function `{s}`")))
                }
                _ if is_reserved(&s) => Err(self.unexpected("expression")),
                _ => {
                    self.advance();
                    Ok(Expr::Ident(s))
                }
            },
            Tok::Question => Err(ParseError::unsupported(span, "conditional expression")),
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_zero_literal(e: &Expr) -> bool {
    matches!(e, Expr::Int(0)) || matches!(e, Expr::Double(v) if *v == 0.0)
}

pub(crate) fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "dtmc"
            | "const"
            | "int"
            | "double"
            | "bool"
            | "module"
            | "endmodule"
            | "init"
            | "label"
            | "rewards"
            | "endrewards"
            | "true"
            | "false"
            | "min"
            | "max"
            | "formula"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "dtmc module M x:[0..1] init 0; [a] x=0 -> 1.0:(x'=1); endmodule";

    #[test]
    fn minimal_model() {
        let m = parse(MINIMAL).unwrap();
        assert_eq!(m.modules.len(), 1);
        assert_eq!(m.modules[0].variables.len(), 1);
        assert_eq!(m.modules[0].commands.len(), 1);
        let cmd = &m.modules[0].commands[0];
        assert_eq!(cmd.action.as_deref(), Some("a"));
        assert_eq!(cmd.updates[0].prob, Expr::Double(1.0));
    }

    #[test]
    fn mdp_is_unsupported() {
        let err = parse("mdp module M x:[0..1] init 0; endmodule").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedConstruct { ref name, .. } if name == "mdp"), "{err:?}");
    }

    #[test]
    fn state_rewards_and_formulas_are_unsupported() {
        let err = parse("dtmc module M x:[0..1]; endmodule rewards \"r\" x=1 : 2; endrewards").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedConstruct { ref name, .. } if name == "state rewards"));
        let err = parse("dtmc formula f = 1;").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedConstruct { ref name, .. } if name == "formula"));
        let err = parse("dtmc module M x:[0..1]; endmodule module M2 = M [x=y] endmodule").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedConstruct { ref name, .. } if name == "module renaming"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("dtmc\nmodule M\n  x : [0..1] init 0\nendmodule").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (4, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn division_by_literal_zero() {
        let err = parse("dtmc const double a = 1/0;").unwrap_err();
        assert!(err.to_string().contains("division by zero"));
        assert!(parse("dtmc const double a = 1/(0+1);").is_ok());
    }

    #[test]
    fn update_forms() {
        let m = parse(
            "dtmc const double p = 0.1;
             module M
               x : [0..2] init 0;
               b : Bool init true;
               [] x=0 -> (1-3*p):(x'=min(x+1, 2)) + p:(x'=0) & (b'=false) + 2*p: true;
               [go] b -> true;
               [stay] !b -> (x'=x);
             endmodule",
        )
        .unwrap();
        let cmds = &m.modules[0].commands;
        assert_eq!(cmds[0].action, None);
        assert_eq!(cmds[0].updates.len(), 3);
        assert_eq!(cmds[0].updates[1].assignments.len(), 2);
        assert!(cmds[0].updates[2].assignments.is_empty());
        assert!(cmds[1].updates[0].assignments.is_empty());
        assert_eq!(cmds[2].updates[0].assignments[0].var, "x");
        assert_eq!(m.modules[0].variables[1].ty, VarType::Bool);
    }

    #[test]
    fn not_binds_looser_than_relations() {
        let e = parse_expr("!x=1 & y>=2").unwrap();
        let expected = Expr::ident("x")
            .eq(Expr::Int(1))
            .not()
            .and(Expr::binary(BinOp::Ge, Expr::ident("y"), Expr::Int(2)));
        assert_eq!(e, expected);
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-3").unwrap(), Expr::Int(-3));
        assert_eq!(
            parse_expr("-(3)").unwrap(),
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Int(3)))
        );
        assert_eq!(
            parse_expr("x - -0.5").unwrap(),
            Expr::binary(BinOp::Sub, Expr::ident("x"), Expr::Double(-0.5))
        );
    }
}
