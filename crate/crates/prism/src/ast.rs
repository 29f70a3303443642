//! Abstract syntax tree for the supported PRISM fragment.
//!
//! Every node that can be the subject of a diagnostic carries a [`Span`].
//! Spans never participate in equality, so a model parsed from its own
//! printed form compares equal to the original.

use std::fmt;

/// Source position (1-based line and column).
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dtmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstKind {
    Int,
    Double,
}

impl fmt::Display for ConstKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstKind::Int => f.write_str("int"),
            ConstKind::Double => f.write_str("double"),
        }
    }
}

/// A complete model file.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub constants: Vec<ConstDecl>,
    pub modules: Vec<ModuleDef>,
    pub labels: Vec<LabelDef>,
    pub rewards: Vec<RewardStruct>,
}

impl Model {
    pub fn new() -> Self {
        Self {
            kind: ModelKind::Dtmc,
            constants: Vec::new(),
            modules: Vec::new(),
            labels: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Unbound constants in declaration order.
    pub fn unbound_constants(&self) -> impl Iterator<Item = &ConstDecl> {
        self.constants.iter().filter(|c| c.value.is_none())
    }

    pub fn is_parametric(&self) -> bool {
        self.unbound_constants().next().is_some()
    }

    /// All variables across modules, in canonical order (module order, then
    /// declaration order), paired with the owning module.
    pub fn variables(&self) -> impl Iterator<Item = (&ModuleDef, &VarDecl)> {
        self.modules
            .iter()
            .flat_map(|m| m.variables.iter().map(move |v| (m, v)))
    }

    pub fn variable(&self, name: &str) -> Option<(&ModuleDef, &VarDecl)> {
        self.variables().find(|(_, v)| v.name == name)
    }

    /// Action labels used by any command, sorted and deduplicated.
    pub fn action_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .modules
            .iter()
            .flat_map(|m| m.commands.iter().filter_map(|c| c.action.clone()))
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

impl Default for Model {
    fn default() -> Self {
        Self::new()
    }
}

/// `const int N = 9;` or `const int decision_0_0;`
#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub kind: ConstKind,
    pub value: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDef {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
    pub span: Span,
}

impl ModuleDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            commands: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn declares(&self, var: &str) -> bool {
        self.variables.iter().any(|v| v.name == var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Range { lo: Expr, hi: Expr },
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: VarType,
    pub init: Option<Expr>,
    pub span: Span,
}

/// `[action] guard -> p1:(x'=e) & (y'=f) + p2:...;`
#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    /// `None` for an unsynchronised `[]` command.
    pub action: Option<String>,
    pub guard: Expr,
    pub updates: Vec<Update>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub prob: Expr,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub var: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDef {
    pub name: String,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardStruct {
    pub name: String,
    pub items: Vec<RewardItem>,
    pub span: Span,
}

/// Action reward `[action] guard : value;`
#[derive(Debug, Clone, PartialEq)]
pub struct RewardItem {
    pub action: Option<String>,
    pub guard: Expr,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Binding strength; larger binds tighter. `!` sits at 3.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_relational(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Double(f64),
    Bool(bool),
    /// Constant or variable reference.
    Ident(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Self {
        Expr::Int(v)
    }

    pub fn double(v: f64) -> Self {
        Expr::Double(v)
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eq(self, rhs: Expr) -> Self {
        Self::binary(BinOp::Eq, self, rhs)
    }

    pub fn and(self, rhs: Expr) -> Self {
        Self::binary(BinOp::And, self, rhs)
    }

    pub fn or(self, rhs: Expr) -> Self {
        Self::binary(BinOp::Or, self, rhs)
    }

    pub fn not(self) -> Self {
        Expr::Unary(UnaryOp::Not, Box::new(self))
    }

    /// Conjunction of all `terms`; `true` when empty.
    pub fn all(terms: impl IntoIterator<Item = Expr>) -> Self {
        terms
            .into_iter()
            .reduce(|acc, t| acc.and(t))
            .unwrap_or(Expr::Bool(true))
    }

    /// Disjunction of all `terms`; `false` when empty.
    pub fn any(terms: impl IntoIterator<Item = Expr>) -> Self {
        terms
            .into_iter()
            .reduce(|acc, t| acc.or(t))
            .unwrap_or(Expr::Bool(false))
    }

    /// Calls `f` on every identifier referenced by this expression.
    pub fn visit_idents<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Ident(name) => f(name),
            Expr::Unary(_, e) => e.visit_idents(f),
            Expr::Binary(_, l, r) => {
                l.visit_idents(f);
                r.visit_idents(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_idents(f)),
            Expr::Int(_) | Expr::Double(_) | Expr::Bool(_) => {}
        }
    }

    pub fn references(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_idents(&mut |id| found |= id == name);
        found
    }
}
