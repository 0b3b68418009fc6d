use std::fmt;

use super::value::{Kind, Value};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Min,
    Max,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Abs,
    Min,
    Max,
    Merge,
    Default,
    Last,
    Time,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "abs" => Builtin::Abs,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "merge" => Builtin::Merge,
            "default" => Builtin::Default,
            "last" => Builtin::Last,
            "time" => Builtin::Time,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Merge => "merge",
            Builtin::Default => "default",
            Builtin::Last => "last",
            Builtin::Time => "time",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Abs | Builtin::Time => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Value),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Lit(v) => write!(f, "{v}"),
            ExprKind::Ident(n) => f.write_str(n),
            ExprKind::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            ExprKind::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::If(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            ExprKind::Call(b, args) => {
                write!(f, "{}(", b.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// `@TelegrafIn(id, tags, field)`: binds an input stream to a payload field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingress {
    pub id: String,
    pub tags: String,
    pub field: String,
}

/// `@TelegrafOut(name)`: external name of an output stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Egress {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: String,
    pub kind: Kind,
    pub ingress: Option<Ingress>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub expr: Expr,
    /// Inferred kind of the stream (annotation if one was given).
    pub kind: Kind,
    pub annotation: Option<Kind>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDecl {
    pub name: String,
    pub egress: Option<Egress>,
    pub span: Span,
}

impl OutputDecl {
    /// Name used on the wire: the egress annotation if present.
    pub fn external_name(&self) -> &str {
        self.egress.as_ref().map_or(&self.name, |e| &e.name)
    }
}

/// A parsed, name-resolved and kind-checked monitor program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorSpec {
    pub inputs: Vec<InputDecl>,
    pub definitions: Vec<Definition>,
    pub outputs: Vec<OutputDecl>,
}

impl MonitorSpec {
    pub fn input(&self, name: &str) -> Option<&InputDecl> {
        self.inputs.iter().find(|i| i.name == name)
    }

    pub fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }

    /// Kind of a declared input or definition.
    pub fn kind_of(&self, name: &str) -> Option<Kind> {
        self.input(name)
            .map(|i| i.kind)
            .or_else(|| self.definition(name).map(|d| d.kind))
    }
}
