//! Lexer, parser and static checks for the monitor language.
//!
//! ```text
//! program  := stmt*
//! stmt     := annot* ( "in" IDENT ":" type
//!                    | "def" IDENT (":" type)? "=" expr
//!                    | "def" "@" IDENT "(" params ")"      -- annotation declaration, ignored
//!                    | "out" IDENT
//!                    | "include" STRING )                 -- ignored
//! annot    := "@" IDENT "(" STRING ("," STRING)* ")"
//! type     := "Events" "[" ("Int" | "Float" | "Bool") "]"
//! expr     := "if" expr "then" expr "else" expr | or
//! ```
//!
//! Binary precedence, loosest first: `||`, `&&`, `== !=`, `< <= > >=`,
//! `+ -`, `* /`, then prefix `-` and `!`. Comments run from `--` or `#`
//! to the end of the line.

use std::collections::HashMap;

use super::ast::*;
use super::error::SpecError;
use super::ops;
use super::value::{Kind, Value};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: [&str; 22] = [
    "<=", ">=", "==", "!=", "&&", "||", ":", "[", "]", "(", ")", ",", "=", "@", "+", "-", "*",
    "/", "<", ">", "!", ";",
];

fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' || (c == '-' && chars.get(i + 1) == Some(&'-')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                advance(&mut i, &mut line, &mut col, 1);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col, 1);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    let n = j - i;
                    advance(&mut i, &mut line, &mut col, n);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance(&mut i, &mut line, &mut col, 1);
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let bad = || SpecError::Syntax { span, msg: format!("invalid number `{text}`") };
            let tok = if is_float {
                Tok::Float(text.parse().map_err(|_| bad())?)
            } else {
                Tok::Int(text.parse().map_err(|_| bad())?)
            };
            out.push(Token { tok, span });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, 1);
            let start = i;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(SpecError::Syntax { span, msg: "unterminated string".into() });
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            if i >= chars.len() {
                return Err(SpecError::Syntax { span, msg: "unterminated string".into() });
            }
            let s: String = chars[start..i].iter().collect();
            advance(&mut i, &mut line, &mut col, 1);
            out.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let sc: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&sc)
        });
        match sym {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.len());
                out.push(Token { tok: Tok::Sym(s), span });
            }
            None => {
                return Err(SpecError::Syntax { span, msg: format!("unexpected character `{c}`") })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

const KEYWORDS: [&str; 10] = ["in", "def", "out", "if", "then", "else", "true", "false", "include", "Events"];

enum Annotation {
    In(Ingress),
    Out(Egress),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, span: Span, msg: impl Into<String>) -> Result<T, SpecError> {
        Err(SpecError::Syntax { span, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == kw)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Span, SpecError> {
        let t = self.next();
        match t.tok {
            Tok::Sym(x) if x == s => Ok(t.span),
            other => self.syntax(t.span, format!("expected `{s}`, found {}", describe(&other))),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, SpecError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(x) if x == kw => Ok(t.span),
            other => self.syntax(t.span, format!("expected `{kw}`, found {}", describe(other))),
        }
    }

    fn ident(&mut self) -> Result<(String, Span), SpecError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => Ok((name, t.span)),
            other => self.syntax(t.span, format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn string(&mut self) -> Result<String, SpecError> {
        let t = self.next();
        match t.tok {
            Tok::Str(s) => Ok(s),
            other => self.syntax(t.span, format!("expected string, found {}", describe(&other))),
        }
    }

    fn stream_type(&mut self) -> Result<Kind, SpecError> {
        self.expect_kw("Events")?;
        self.expect_sym("[")?;
        let t = self.next();
        let kind = match &t.tok {
            Tok::Ident(k) if k == "Int" => Kind::Int,
            Tok::Ident(k) if k == "Float" => Kind::Float,
            Tok::Ident(k) if k == "Bool" => Kind::Bool,
            other => return self.syntax(t.span, format!("expected Int, Float or Bool, found {}", describe(other))),
        };
        self.expect_sym("]")?;
        Ok(kind)
    }

    fn annotation(&mut self) -> Result<(Annotation, Span), SpecError> {
        let at = self.expect_sym("@")?;
        let (name, _) = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.string()?);
                if self.is_sym(",") {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        match (name.as_str(), args.len()) {
            ("TelegrafIn", 3) => {
                let mut it = args.into_iter();
                let (id, tags, field) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                Ok((Annotation::In(Ingress { id, tags, field }), at))
            }
            ("TelegrafOut", 1) => Ok((Annotation::Out(Egress { name: args.remove(0) }), at)),
            ("TelegrafIn", n) | ("TelegrafOut", n) => {
                self.syntax(at, format!("`@{name}` does not take {n} argument(s)"))
            }
            _ => self.syntax(at, format!("unknown annotation `@{name}`")),
        }
    }

    /// `def @Name(p: String, ...)`: declaration of an annotation; skipped.
    fn annotation_decl(&mut self) -> Result<(), SpecError> {
        self.expect_sym("@")?;
        self.ident()?;
        self.expect_sym("(")?;
        while !self.is_sym(")") {
            let t = self.next();
            if t.tok == Tok::Eof {
                return self.syntax(t.span, "unterminated annotation declaration");
            }
        }
        self.expect_sym(")")?;
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, SpecError> {
        if self.is_kw("if") {
            let span = self.next().span;
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::new(ExprKind::If(Box::new(c), Box::new(a), Box::new(b)), span));
        }
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, SpecError> {
        const LEVELS: [&[(&str, BinOp)]; 6] = [
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<=", BinOp::Le), (">=", BinOp::Ge), ("<", BinOp::Lt), (">", BinOp::Gt)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = LEVELS[level].iter().find(|(s, _)| self.is_sym(s)).map(|(_, op)| *op);
            let Some(op) = op else { break };
            let span = self.next().span;
            // `if` binds loosest but may appear as a right operand.
            let rhs = if self.is_kw("if") { self.expr()? } else { self.binary(level + 1)? };
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SpecError> {
        if self.is_sym("-") || self.is_sym("!") {
            let t = self.next();
            let op = if t.tok == Tok::Sym("-") { UnOp::Neg } else { UnOp::Not };
            let inner = self.unary()?;
            // Fold negative numeric literals so `default(x, -1)` stays a literal.
            if op == UnOp::Neg {
                match inner.kind {
                    ExprKind::Lit(Value::Int(i)) => {
                        return Ok(Expr::new(ExprKind::Lit(Value::Int(i.wrapping_neg())), t.span))
                    }
                    ExprKind::Lit(Value::Float(x)) => {
                        return Ok(Expr::new(ExprKind::Lit(Value::Float(-x)), t.span))
                    }
                    _ => {}
                }
            }
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), t.span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SpecError> {
        let t = self.next();
        match t.tok {
            Tok::Int(i) => Ok(Expr::new(ExprKind::Lit(Value::Int(i)), t.span)),
            Tok::Float(x) => Ok(Expr::new(ExprKind::Lit(Value::Float(x)), t.span)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(ref name) if name == "true" || name == "false" => {
                Ok(Expr::new(ExprKind::Lit(Value::Bool(name == "true")), t.span))
            }
            Tok::Ident(ref name) if name == "if" => {
                self.pos -= 1;
                self.expr()
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                if !self.is_sym("(") {
                    return Ok(Expr::new(ExprKind::Ident(name), t.span));
                }
                let Some(builtin) = Builtin::from_name(&name) else {
                    return self.syntax(t.span, format!("unknown function `{name}`"));
                };
                self.next();
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.is_sym(",") {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                if args.len() != builtin.arity() {
                    return Err(SpecError::Arity {
                        span: t.span,
                        builtin: builtin.name().into(),
                        expected: builtin.arity(),
                        found: args.len(),
                    });
                }
                Ok(Expr::new(ExprKind::Call(builtin, args), t.span))
            }
            other => self.syntax(t.span, format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Float(x) => format!("`{x}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

struct RawDef {
    name: String,
    annotation: Option<Kind>,
    expr: Expr,
    span: Span,
}

/// Parses and checks a monitor program.
pub fn parse_spec(text: &str) -> Result<MonitorSpec, SpecError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut inputs: Vec<InputDecl> = Vec::new();
    let mut defs: Vec<RawDef> = Vec::new();
    let mut outputs: Vec<OutputDecl> = Vec::new();
    let mut names: HashMap<String, Span> = HashMap::new();

    let mut declare = |name: &str, span: Span| -> Result<(), SpecError> {
        if names.insert(name.to_string(), span).is_some() {
            return Err(SpecError::Duplicate { span, name: name.to_string() });
        }
        Ok(())
    };

    loop {
        let mut pending: Vec<(Annotation, Span)> = Vec::new();
        while p.is_sym("@") {
            pending.push(p.annotation()?);
        }
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => {
                if let Some((_, span)) = pending.first() {
                    return p.syntax(*span, "annotation without a declaration");
                }
                break;
            }
            Tok::Sym(";") => {
                p.next();
            }
            Tok::Ident(kw) if kw == "in" => {
                p.next();
                let (name, span) = p.ident()?;
                p.expect_sym(":")?;
                let kind = p.stream_type()?;
                let mut ingress = None;
                for (a, aspan) in pending.drain(..) {
                    match a {
                        Annotation::In(i) if ingress.is_none() => ingress = Some(i),
                        _ => return p.syntax(aspan, "only one `@TelegrafIn` may annotate an input"),
                    }
                }
                declare(&name, span)?;
                inputs.push(InputDecl { name, kind, ingress, span });
            }
            Tok::Ident(kw) if kw == "def" => {
                p.next();
                if p.is_sym("@") {
                    p.annotation_decl()?;
                    continue;
                }
                if let Some((_, aspan)) = pending.first() {
                    return p.syntax(*aspan, "annotations apply to `in` and `out` declarations");
                }
                let (name, span) = p.ident()?;
                let annotation = if p.is_sym(":") {
                    p.next();
                    Some(p.stream_type()?)
                } else {
                    None
                };
                p.expect_sym("=")?;
                let expr = p.expr()?;
                declare(&name, span)?;
                defs.push(RawDef { name, annotation, expr, span });
            }
            Tok::Ident(kw) if kw == "out" => {
                p.next();
                let (name, span) = p.ident()?;
                let mut egress = None;
                for (a, aspan) in pending.drain(..) {
                    match a {
                        Annotation::Out(e) if egress.is_none() => egress = Some(e),
                        _ => return p.syntax(aspan, "only one `@TelegrafOut` may annotate an output"),
                    }
                }
                if outputs.iter().any(|o| o.name == name) {
                    return Err(SpecError::Duplicate { span, name });
                }
                outputs.push(OutputDecl { name, egress, span });
            }
            Tok::Ident(kw) if kw == "include" => {
                p.next();
                p.string()?;
            }
            other => {
                return p.syntax(t.span, format!("expected `in`, `def` or `out`, found {}", describe(other)))
            }
        }
    }

    check(inputs, defs, outputs)
}

fn check(inputs: Vec<InputDecl>, defs: Vec<RawDef>, outputs: Vec<OutputDecl>) -> Result<MonitorSpec, SpecError> {
    let declared = |name: &str| inputs.iter().any(|i| i.name == name) || defs.iter().any(|d| d.name == name);

    for d in &defs {
        resolve(&d.expr, &declared)?;
    }
    for o in &outputs {
        if !declared(&o.name) {
            return Err(SpecError::Undefined { span: o.span, name: o.name.clone() });
        }
    }

    let mut env: HashMap<String, Kind> = inputs.iter().map(|i| (i.name.clone(), i.kind)).collect();
    for d in &defs {
        if let Some(k) = d.annotation {
            env.insert(d.name.clone(), k);
        }
    }

    // Fixpoint over definition kinds; recursion through `last` can leave a
    // kind unknown for a round. Kinds only move up the Int -> Float lattice,
    // so this terminates.
    for _ in 0..=defs.len() + 1 {
        let mut changed = false;
        for d in defs.iter().filter(|d| d.annotation.is_none()) {
            if let Some(k) = infer(&d.expr, &env, false)? {
                let merged = match env.get(&d.name) {
                    Some(&prev) => prev.unify(k).ok_or_else(|| SpecError::KindMismatch {
                        span: d.span,
                        msg: format!("`{}` is both {prev} and {k}", d.name),
                    })?,
                    None => k,
                };
                if env.get(&d.name) != Some(&merged) {
                    env.insert(d.name.clone(), merged);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // A definition only reachable through its own `last` never carries a
    // value; give it a kind so the graph can still be built.
    for d in &defs {
        env.entry(d.name.clone()).or_insert(Kind::Int);
    }

    let mut definitions = Vec::with_capacity(defs.len());
    for d in defs {
        let body = infer(&d.expr, &env, true)?.expect("strict inference yields a kind");
        let kind = env[&d.name];
        if body.unify(kind) != Some(kind) {
            return Err(SpecError::KindMismatch {
                span: d.span,
                msg: format!("`{}` declared {kind} but its body is {body}", d.name),
            });
        }
        definitions.push(Definition { name: d.name, expr: d.expr, kind, annotation: d.annotation, span: d.span });
    }

    Ok(MonitorSpec { inputs, definitions, outputs })
}

fn resolve(e: &Expr, declared: &dyn Fn(&str) -> bool) -> Result<(), SpecError> {
    match &e.kind {
        ExprKind::Lit(_) => Ok(()),
        ExprKind::Ident(n) => {
            if declared(n) {
                Ok(())
            } else {
                Err(SpecError::Undefined { span: e.span, name: n.clone() })
            }
        }
        ExprKind::Unary(_, a) => resolve(a, declared),
        ExprKind::Binary(_, a, b) => {
            resolve(a, declared)?;
            resolve(b, declared)
        }
        ExprKind::If(c, a, b) => {
            resolve(c, declared)?;
            resolve(a, declared)?;
            resolve(b, declared)
        }
        ExprKind::Call(_, args) => args.iter().try_for_each(|a| resolve(a, declared)),
    }
}

/// Infers the kind of an expression. In lenient mode unknown identifiers
/// yield `Ok(None)`; in strict mode every identifier must be in `env`.
fn infer(e: &Expr, env: &HashMap<String, Kind>, strict: bool) -> Result<Option<Kind>, SpecError> {
    let mismatch = |msg: String| SpecError::KindMismatch { span: e.span, msg };
    let numeric = |k: Kind, what: &str| -> Result<Kind, SpecError> {
        if k.is_numeric() {
            Ok(k)
        } else {
            Err(mismatch(format!("`{what}` needs a numeric operand, got {k}")))
        }
    };
    let sub = |x: &Expr| infer(x, env, strict);

    Ok(match &e.kind {
        ExprKind::Lit(v) => Some(v.kind()),
        ExprKind::Ident(n) => match env.get(n) {
            Some(k) => Some(*k),
            None if strict => return Err(mismatch(format!("cannot infer the kind of `{n}`"))),
            None => None,
        },
        ExprKind::Unary(UnOp::Neg, a) => match sub(a)? {
            Some(k) => Some(numeric(k, "-")?),
            None => None,
        },
        ExprKind::Unary(UnOp::Not, a) => match sub(a)? {
            Some(Kind::Bool) => Some(Kind::Bool),
            Some(k) => return Err(mismatch(format!("`!` needs Bool, got {k}"))),
            None => None,
        },
        ExprKind::Binary(op, a, b) => {
            let (ka, kb) = (sub(a)?, sub(b)?);
            let (Some(ka), Some(kb)) = (ka, kb) else {
                // Comparisons and logic have a fixed result kind.
                return Ok(match op {
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
                    | BinOp::And | BinOp::Or => Some(Kind::Bool),
                    BinOp::Div => Some(Kind::Float),
                    _ => None,
                });
            };
            Some(binary_kind(*op, ka, kb).map_err(mismatch)?)
        }
        ExprKind::If(c, a, b) => {
            if let Some(kc) = sub(c)? {
                if kc != Kind::Bool {
                    return Err(mismatch(format!("`if` condition must be Bool, got {kc}")));
                }
            }
            match (sub(a)?, sub(b)?) {
                (Some(ka), Some(kb)) => Some(
                    ka.unify(kb)
                        .ok_or_else(|| mismatch(format!("`if` branches are {ka} and {kb}")))?,
                ),
                (k, None) | (None, k) => k,
            }
        }
        ExprKind::Call(builtin, args) => match builtin {
            Builtin::Abs => match sub(&args[0])? {
                Some(k) => Some(numeric(k, "abs")?),
                None => None,
            },
            Builtin::Min | Builtin::Max => match (sub(&args[0])?, sub(&args[1])?) {
                (Some(ka), Some(kb)) => Some(binary_kind(BinOp::Min, ka, kb).map_err(mismatch)?),
                _ => None,
            },
            Builtin::Merge => match (sub(&args[0])?, sub(&args[1])?) {
                (Some(ka), Some(kb)) if ka != kb => {
                    return Err(mismatch(format!("`merge` of {ka} and {kb}")))
                }
                (Some(k), _) | (None, Some(k)) => Some(k),
                (None, None) => None,
            },
            Builtin::Default => {
                let kv = constant_value(&args[1])
                    .ok_or(SpecError::NotConstant { span: args[1].span })?
                    .kind();
                match sub(&args[0])? {
                    Some(ks) => Some(
                        ks.unify(kv)
                            .ok_or_else(|| mismatch(format!("`default` of {ks} with {kv} value")))?,
                    ),
                    None => Some(kv),
                }
            }
            Builtin::Last => {
                sub(&args[1])?;
                sub(&args[0])?
            }
            Builtin::Time => {
                sub(&args[0])?;
                Some(Kind::Float)
            }
        },
    })
}

pub(crate) fn binary_kind(op: BinOp, a: Kind, b: Kind) -> Result<Kind, String> {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Min | BinOp::Max => {
            if a.is_numeric() && b.is_numeric() {
                Ok(a.unify(b).expect("numeric kinds unify"))
            } else {
                Err(format!("`{}` of {a} and {b}", op.symbol()))
            }
        }
        BinOp::Div => {
            if a.is_numeric() && b.is_numeric() {
                Ok(Kind::Float)
            } else {
                Err(format!("`/` of {a} and {b}"))
            }
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            if a.is_numeric() && b.is_numeric() {
                Ok(Kind::Bool)
            } else {
                Err(format!("`{}` of {a} and {b}", op.symbol()))
            }
        }
        BinOp::Eq | BinOp::Ne => a
            .unify(b)
            .map(|_| Kind::Bool)
            .ok_or_else(|| format!("`{}` of {a} and {b}", op.symbol())),
        BinOp::And | BinOp::Or => {
            if a == Kind::Bool && b == Kind::Bool {
                Ok(Kind::Bool)
            } else {
                Err(format!("`{}` of {a} and {b}", op.symbol()))
            }
        }
    }
}

/// Folds an expression built only from literals.
pub(crate) fn constant_value(e: &Expr) -> Option<Value> {
    match &e.kind {
        ExprKind::Lit(v) => Some(*v),
        ExprKind::Unary(op, a) => ops::unary(*op, constant_value(a)?).ok(),
        ExprKind::Binary(op, a, b) => {
            let (va, vb) = (constant_value(a)?, constant_value(b)?);
            let k = binary_kind(*op, va.kind(), vb.kind()).ok()?;
            ops::binary(*op, va, vb).ok().and_then(|v| v.coerce(k))
        }
        ExprKind::If(c, a, b) => {
            if constant_value(c)?.as_bool()? {
                constant_value(a)
            } else {
                constant_value(b)
            }
        }
        ExprKind::Call(Builtin::Abs, args) => ops::abs(constant_value(&args[0])?).ok(),
        ExprKind::Call(Builtin::Min, args) => {
            ops::binary(BinOp::Min, constant_value(&args[0])?, constant_value(&args[1])?).ok()
        }
        ExprKind::Call(Builtin::Max, args) => {
            ops::binary(BinOp::Max, constant_value(&args[0])?, constant_value(&args[1])?).ok()
        }
        _ => None,
    }
}

impl MonitorSpec {
    /// Replaces the body of a literal definition, e.g. a tolerance constant.
    /// `Int` values are widened when the definition is `Float`.
    pub fn set_constant(&mut self, name: &str, value: Value) -> Result<(), SpecError> {
        let not_const = || SpecError::NotAConstant { name: name.to_string() };
        let def = self.definitions.iter_mut().find(|d| d.name == name).ok_or_else(not_const)?;
        constant_value(&def.expr).ok_or_else(not_const)?;
        let v = value.coerce(def.kind).ok_or_else(|| SpecError::KindMismatch {
            span: def.span,
            msg: format!("`{name}` is {}, got {}", def.kind, value.kind()),
        })?;
        def.expr = Expr::new(ExprKind::Lit(v), def.expr.span);
        Ok(())
    }
}
