//! Reference evaluator for monitor programs.
//!
//! Works on the AST and the full input history: for every distinct input
//! timestamp it asks each output "do you have an event here, and with which
//! value?", recursing through sub-expressions and previous timestamps. It
//! shares only the scalar operator semantics (`stream::ops`) with the
//! compiled evaluator, not its graph or state handling.

use std::collections::HashMap;

use rvtwin::stream::ast::{BinOp, Builtin, Expr, ExprKind, UnOp};
use rvtwin::stream::{ops, Kind, MonitorSpec, TimedEvent, Timestamp, Trace, Value};

pub fn oracle_run(spec: &MonitorSpec, trace: &Trace) -> Trace {
    let mut times: Vec<Timestamp> = trace.entries().iter().map(|(_, e)| e.t).collect();
    times.dedup();
    let mut inputs: HashMap<(String, usize), Value> = HashMap::new();
    for (name, ev) in trace {
        let ti = times.binary_search(&ev.t).unwrap();
        let kind = spec.input(name).expect("trace names declared inputs").kind;
        inputs.insert((name.clone(), ti), ev.value.coerce(kind).expect("input kind"));
    }
    let mut o = Oracle { spec, times: &times, inputs, event_memo: HashMap::new() };
    let mut out = Trace::new();
    for ti in 0..times.len() {
        for decl in &spec.outputs {
            let ev = match spec.definition(&decl.name) {
                Some(d) => o.event(&d.expr, ti).and_then(|v| v.coerce(d.kind)),
                None => o.inputs.get(&(decl.name.clone(), ti)).copied(),
            };
            if let Some(v) = ev {
                out.push(&decl.name, TimedEvent::new(times[ti], v)).unwrap();
            }
        }
    }
    out
}

struct Oracle<'a> {
    spec: &'a MonitorSpec,
    times: &'a [Timestamp],
    inputs: HashMap<(String, usize), Value>,
    event_memo: HashMap<(usize, usize), Option<Value>>,
}

impl<'a> Oracle<'a> {
    fn def_expr(&self, name: &str) -> Option<&'a Expr> {
        self.spec.definition(name).map(|d| &d.expr)
    }

    fn kind(&self, e: &Expr) -> Kind {
        match &e.kind {
            ExprKind::Lit(v) => v.kind(),
            ExprKind::Ident(n) => self.spec.kind_of(n).unwrap(),
            ExprKind::Unary(UnOp::Not, _) => Kind::Bool,
            ExprKind::Unary(UnOp::Neg, a) => self.kind(a),
            ExprKind::Binary(op, a, b) => match op {
                BinOp::Div => Kind::Float,
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Min | BinOp::Max => {
                    self.kind(a).unify(self.kind(b)).unwrap()
                }
                _ => Kind::Bool,
            },
            ExprKind::If(_, a, b) => self.kind(a).unify(self.kind(b)).unwrap(),
            ExprKind::Call(f, args) => match f {
                Builtin::Abs | Builtin::Last | Builtin::Merge => self.kind(&args[0]),
                Builtin::Min | Builtin::Max => self.kind(&args[0]).unify(self.kind(&args[1])).unwrap(),
                Builtin::Default => self.kind(&args[0]).unify(lit(&args[1]).kind()).unwrap(),
                Builtin::Time => Kind::Float,
            },
        }
    }

    /// Value before any event.
    fn init(&self, e: &Expr) -> Option<Value> {
        let v = match &e.kind {
            ExprKind::Lit(v) => Some(*v),
            ExprKind::Ident(n) => self.def_expr(n).and_then(|d| self.init(d)),
            ExprKind::Unary(op, a) => self.init(a).and_then(|x| ops::unary(*op, x).ok()),
            ExprKind::Binary(op, a, b) => match (self.init(a), self.init(b)) {
                (Some(x), Some(y)) => ops::binary(*op, x, y).ok(),
                _ => None,
            },
            ExprKind::If(c, a, b) => match (self.init(c), self.init(a), self.init(b)) {
                (Some(c), Some(x), Some(y)) => Some(if c == Value::Bool(true) { x } else { y }),
                _ => None,
            },
            ExprKind::Call(f, args) => match f {
                Builtin::Abs => self.init(&args[0]).and_then(|x| ops::abs(x).ok()),
                Builtin::Min | Builtin::Max => {
                    let op = if *f == Builtin::Min { BinOp::Min } else { BinOp::Max };
                    match (self.init(&args[0]), self.init(&args[1])) {
                        (Some(x), Some(y)) => ops::binary(op, x, y).ok(),
                        _ => None,
                    }
                }
                Builtin::Merge => self.init(&args[0]).or(self.init(&args[1])),
                Builtin::Default => self.init(&args[0]).or(Some(lit(&args[1]))),
                Builtin::Last | Builtin::Time => None,
            },
        };
        v.and_then(|v| v.coerce(self.kind(e)))
    }

    /// Latest value at or before `ti` (`strict`: before `ti`).
    fn known(&mut self, e: &Expr, ti: usize, strict: bool) -> Option<Value> {
        let end = if strict { ti } else { ti + 1 };
        for tau in (0..end).rev() {
            if let Some(v) = self.event(e, tau) {
                return Some(v);
            }
        }
        self.init(e)
    }

    fn event(&mut self, e: &Expr, ti: usize) -> Option<Value> {
        let key = (e as *const Expr as usize, ti);
        if let Some(v) = self.event_memo.get(&key) {
            return *v;
        }
        let v = self.compute_event(e, ti).and_then(|v| v.coerce(self.kind(e)));
        self.event_memo.insert(key, v);
        v
    }

    fn lifted(&mut self, operands: &[&Expr], ti: usize) -> Option<Vec<Value>> {
        let mut any = false;
        for o in operands {
            any |= self.event(o, ti).is_some();
        }
        if !any {
            return None;
        }
        operands.iter().map(|o| self.known(o, ti, false)).collect()
    }

    fn compute_event(&mut self, e: &Expr, ti: usize) -> Option<Value> {
        match &e.kind {
            ExprKind::Lit(_) => None,
            ExprKind::Ident(n) => {
                if self.spec.input(n).is_some() {
                    return self.inputs.get(&(n.clone(), ti)).copied();
                }
                let d = self.def_expr(n).unwrap();
                self.event(d, ti)
            }
            ExprKind::Unary(op, a) => self.lifted(&[a], ti).and_then(|v| ops::unary(*op, v[0]).ok()),
            ExprKind::Binary(op, a, b) => self.lifted(&[a, b], ti).and_then(|v| ops::binary(*op, v[0], v[1]).ok()),
            ExprKind::If(c, a, b) => self
                .lifted(&[c, a, b], ti)
                .map(|v| if v[0] == Value::Bool(true) { v[1] } else { v[2] }),
            ExprKind::Call(f, args) => match f {
                Builtin::Abs => self.lifted(&[&args[0]], ti).and_then(|v| ops::abs(v[0]).ok()),
                Builtin::Min | Builtin::Max => {
                    let op = if *f == Builtin::Min { BinOp::Min } else { BinOp::Max };
                    self.lifted(&[&args[0], &args[1]], ti).and_then(|v| ops::binary(op, v[0], v[1]).ok())
                }
                Builtin::Merge => {
                    let a = self.event(&args[0], ti);
                    let b = self.event(&args[1], ti);
                    a.or(b)
                }
                Builtin::Default => self.event(&args[0], ti),
                Builtin::Last => {
                    self.event(&args[1], ti)?;
                    self.known(&args[0], ti, true)
                }
                Builtin::Time => self.event(&args[0], ti).map(|_| Value::Float(self.times[ti].as_secs_f64())),
            },
        }
    }
}

fn lit(e: &Expr) -> Value {
    match &e.kind {
        ExprKind::Lit(v) => *v,
        other => panic!("generated default values are literals, got {other:?}"),
    }
}
