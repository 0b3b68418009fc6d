//! Compiled dataflow form of a [`MonitorSpec`] and its incremental
//! evaluator.
//!
//! Operators use signal-lift semantics: a lifted node fires at `t` when any
//! operand fires at `t` and every operand has a known value. Events sharing a
//! timestamp are absorbed first and evaluated together as one step, so the
//! result of [`MonitorGraph::push_event`] is the output of whichever step the
//! push closed. Call [`MonitorGraph::flush`] to close the last one.
//!
//! Literals and `default` values are known from the start without ever
//! firing, and lifted operators over known values are known as well, so
//! `x > 2 * delta` works when `delta` is a constant definition.

use std::collections::HashMap;

use super::ast::*;
use super::error::{EvalError, SpecError};
use super::ops;
use super::parser::constant_value;
use super::trace::{TimedEvent, Trace};
use super::value::{Kind, Timestamp, Value};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Input(usize),
    Const(Value),
    /// Forwards another node; used when a definition is a bare identifier.
    Copy(NodeId),
    Unary(UnOp, NodeId),
    Binary(BinOp, NodeId, NodeId),
    Abs(NodeId),
    If(NodeId, NodeId, NodeId),
    Merge(NodeId, NodeId),
    Default(NodeId, Value),
    Last { values: NodeId, trigger: NodeId },
    Time(NodeId),
}

impl Op {
    /// Same-step dependencies. `last` reads its value operand from the
    /// previous step, so that edge is excluded.
    fn deps(&self) -> Vec<NodeId> {
        match *self {
            Op::Input(_) | Op::Const(_) => vec![],
            Op::Copy(a) | Op::Unary(_, a) | Op::Abs(a) | Op::Default(a, _) | Op::Time(a) => vec![a],
            Op::Binary(_, a, b) | Op::Merge(a, b) => vec![a, b],
            Op::If(c, a, b) => vec![c, a, b],
            Op::Last { trigger, .. } => vec![trigger],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub op: Op,
    pub kind: Kind,
    /// Definition or input this node is the root of.
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
struct Pending {
    t: Timestamp,
    values: Vec<Option<Value>>,
}

/// Topologically ordered operator graph plus its evaluation state.
#[derive(Debug, Clone)]
pub struct MonitorGraph {
    nodes: Vec<Node>,
    order: Vec<NodeId>,
    inputs: Vec<(String, NodeId, Kind)>,
    input_index: HashMap<String, usize>,
    outputs: Vec<(String, NodeId)>,
    known: Vec<Option<Value>>,
    pending: Option<Pending>,
    last_step: Option<Timestamp>,
}

struct Builder<'a> {
    spec: &'a MonitorSpec,
    nodes: Vec<Node>,
    roots: HashMap<&'a str, NodeId>,
}

impl<'a> Builder<'a> {
    fn add(&mut self, op: Op, kind: Kind) -> NodeId {
        self.nodes.push(Node { op, kind, name: None });
        self.nodes.len() - 1
    }

    fn kind(&self, id: NodeId) -> Kind {
        self.nodes[id].kind
    }

    fn expr(&mut self, e: &Expr, slot: Option<NodeId>) -> Result<NodeId, SpecError> {
        let mismatch = |msg: String| SpecError::KindMismatch { span: e.span, msg };
        let (op, kind) = match &e.kind {
            ExprKind::Lit(v) => (Op::Const(*v), v.kind()),
            ExprKind::Ident(n) => {
                let target = *self
                    .roots
                    .get(n.as_str())
                    .ok_or_else(|| SpecError::Undefined { span: e.span, name: n.clone() })?;
                match slot {
                    None => return Ok(target),
                    Some(_) => (Op::Copy(target), self.kind(target)),
                }
            }
            ExprKind::Unary(op, a) => {
                let a = self.expr(a, None)?;
                let k = self.kind(a);
                match (op, k) {
                    (UnOp::Neg, k) if k.is_numeric() => (Op::Unary(*op, a), k),
                    (UnOp::Not, Kind::Bool) => (Op::Unary(*op, a), Kind::Bool),
                    _ => return Err(mismatch(format!("unary operator on {k}"))),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (self.expr(a, None)?, self.expr(b, None)?);
                let k = super::parser::binary_kind(*op, self.kind(a), self.kind(b)).map_err(mismatch)?;
                (Op::Binary(*op, a, b), k)
            }
            ExprKind::If(c, a, b) => {
                let (c, a, b) = (self.expr(c, None)?, self.expr(a, None)?, self.expr(b, None)?);
                let k = self
                    .kind(a)
                    .unify(self.kind(b))
                    .filter(|_| self.kind(c) == Kind::Bool)
                    .ok_or_else(|| mismatch("ill-kinded `if`".into()))?;
                (Op::If(c, a, b), k)
            }
            ExprKind::Call(builtin, args) => {
                if args.len() != builtin.arity() {
                    return Err(SpecError::Arity {
                        span: e.span,
                        builtin: builtin.name().into(),
                        expected: builtin.arity(),
                        found: args.len(),
                    });
                }
                match builtin {
                    Builtin::Abs => {
                        let a = self.expr(&args[0], None)?;
                        (Op::Abs(a), self.kind(a))
                    }
                    Builtin::Min | Builtin::Max => {
                        let op = if *builtin == Builtin::Min { BinOp::Min } else { BinOp::Max };
                        let (a, b) = (self.expr(&args[0], None)?, self.expr(&args[1], None)?);
                        let k = super::parser::binary_kind(op, self.kind(a), self.kind(b)).map_err(mismatch)?;
                        (Op::Binary(op, a, b), k)
                    }
                    Builtin::Merge => {
                        let (a, b) = (self.expr(&args[0], None)?, self.expr(&args[1], None)?);
                        if self.kind(a) != self.kind(b) {
                            return Err(mismatch("`merge` of unequal kinds".into()));
                        }
                        (Op::Merge(a, b), self.kind(a))
                    }
                    Builtin::Default => {
                        let s = self.expr(&args[0], None)?;
                        let v = constant_value(&args[1]).ok_or(SpecError::NotConstant { span: args[1].span })?;
                        let k = self.kind(s).unify(v.kind()).ok_or_else(|| mismatch("ill-kinded `default`".into()))?;
                        (Op::Default(s, v), k)
                    }
                    Builtin::Last => {
                        let values = self.expr(&args[0], None)?;
                        let trigger = self.expr(&args[1], None)?;
                        (Op::Last { values, trigger }, self.kind(values))
                    }
                    Builtin::Time => {
                        let a = self.expr(&args[0], None)?;
                        (Op::Time(a), Kind::Float)
                    }
                }
            }
        };
        match slot {
            Some(id) => {
                self.nodes[id].op = op;
                self.nodes[id].kind = kind;
                Ok(id)
            }
            None => Ok(self.add(op, kind)),
        }
    }
}

/// Compiles a checked spec into a graph with fresh state.
pub fn compile(spec: &MonitorSpec) -> Result<MonitorGraph, SpecError> {
    let mut b = Builder { spec, nodes: Vec::new(), roots: HashMap::new() };
    let mut inputs = Vec::new();
    for (i, input) in spec.inputs.iter().enumerate() {
        let id = b.add(Op::Input(i), input.kind);
        b.nodes[id].name = Some(input.name.clone());
        b.roots.insert(&input.name, id);
        inputs.push((input.name.clone(), id, input.kind));
    }
    // Reserve a root slot per definition so forward references resolve.
    for d in &spec.definitions {
        let id = b.add(Op::Const(Value::Int(0)), d.kind);
        b.nodes[id].name = Some(d.name.clone());
        b.roots.insert(&d.name, id);
    }
    for d in &b.spec.definitions {
        let slot = b.roots[d.name.as_str()];
        b.expr(&d.expr, Some(slot))?;
        // Root kind follows the declared/inferred kind (Int bodies widen).
        if b.nodes[slot].kind.unify(d.kind) != Some(d.kind) {
            return Err(SpecError::KindMismatch {
                span: d.span,
                msg: format!("`{}` body is {}, declared {}", d.name, b.nodes[slot].kind, d.kind),
            });
        }
        b.nodes[slot].kind = d.kind;
    }

    let outputs = spec
        .outputs
        .iter()
        .map(|o| {
            b.roots
                .get(o.name.as_str())
                .map(|&id| (o.name.clone(), id))
                .ok_or_else(|| SpecError::Undefined { span: o.span, name: o.name.clone() })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let order = topo_order(&b.nodes)?;
    let known = initial_known(&b.nodes, &order);
    let input_index = inputs.iter().enumerate().map(|(i, (n, _, _))| (n.clone(), i)).collect();

    Ok(MonitorGraph {
        nodes: b.nodes,
        order,
        inputs,
        input_index,
        outputs,
        known,
        pending: None,
        last_step: None,
    })
}

/// Value each node holds before any event: constants, `default` values and
/// lifted operators over those. Nodes without one stay `None`.
fn initial_known(nodes: &[Node], order: &[NodeId]) -> Vec<Option<Value>> {
    let mut init: Vec<Option<Value>> = vec![None; nodes.len()];
    for &id in order {
        let node = &nodes[id];
        let v = match node.op {
            Op::Input(_) | Op::Last { .. } | Op::Time(_) => None,
            Op::Const(v) => Some(v),
            Op::Copy(a) => init[a],
            Op::Default(s, v) => init[s].or(Some(v)),
            Op::Merge(a, b) => init[a].or(init[b]),
            Op::Unary(op, a) => init[a].and_then(|x| ops::unary(op, x).ok()),
            Op::Abs(a) => init[a].and_then(|x| ops::abs(x).ok()),
            Op::Binary(op, a, b) => match (init[a], init[b]) {
                (Some(x), Some(y)) => ops::binary(op, x, y).ok(),
                _ => None,
            },
            Op::If(c, a, b) => match (init[c], init[a], init[b]) {
                (Some(c), Some(x), Some(y)) => Some(if c == Value::Bool(true) { x } else { y }),
                _ => None,
            },
        };
        init[id] = v.and_then(|v| v.coerce(node.kind));
    }
    init
}

fn topo_order(nodes: &[Node]) -> Result<Vec<NodeId>, SpecError> {
    let n = nodes.len();
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (id, node) in nodes.iter().enumerate() {
        for d in node.op.deps() {
            indegree[id] += 1;
            dependents[d].push(id);
        }
    }
    let mut ready: Vec<NodeId> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(id) = ready.pop() {
        order.push(id);
        for &dep in dependents[id].iter().rev() {
            indegree[dep] -= 1;
            if indegree[dep] == 0 {
                ready.push(dep);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0 && nodes[i].name.is_some()).unwrap_or(0);
        let name = nodes[stuck].name.clone().unwrap_or_else(|| format!("node {stuck}"));
        return Err(SpecError::IllegalCycle { name });
    }
    Ok(order)
}

impl MonitorGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Node ids in evaluation order.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn input_kind(&self, name: &str) -> Option<Kind> {
        self.input_index.get(name).map(|&i| self.inputs[i].2)
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|(n, _)| n.as_str())
    }

    /// Clears all evaluation state.
    pub fn reset(&mut self) {
        self.known = initial_known(&self.nodes, &self.order);
        self.pending = None;
        self.last_step = None;
    }

    /// Feeds one input event. Returns the outputs of the step this event
    /// closed, if its timestamp is later than the buffered one.
    pub fn push_event(&mut self, stream: &str, ev: TimedEvent) -> Result<Vec<(String, TimedEvent)>, EvalError> {
        let &idx = self
            .input_index
            .get(stream)
            .ok_or_else(|| EvalError::UnknownStream(stream.to_string()))?;
        let kind = self.inputs[idx].2;
        let value = ev.value.coerce(kind).ok_or(EvalError::KindMismatch {
            stream: stream.to_string(),
            expected: kind,
            found: ev.value.kind(),
        })?;
        let regression = |prev| EvalError::TimestampRegression { stream: stream.to_string(), t: ev.t, prev };

        let mut out = Vec::new();
        match &mut self.pending {
            Some(p) if ev.t == p.t => {
                if p.values[idx].is_some() {
                    return Err(regression(p.t));
                }
                p.values[idx] = Some(value);
                return Ok(out);
            }
            Some(p) if ev.t < p.t => return Err(regression(p.t)),
            Some(_) => out = self.flush(),
            None => {
                if let Some(prev) = self.last_step {
                    if ev.t <= prev {
                        return Err(regression(prev));
                    }
                }
            }
        }
        let mut values = vec![None; self.inputs.len()];
        values[idx] = Some(value);
        self.pending = Some(Pending { t: ev.t, values });
        Ok(out)
    }

    /// Evaluates the buffered step, if any.
    pub fn flush(&mut self) -> Vec<(String, TimedEvent)> {
        match self.pending.take() {
            Some(p) => {
                self.last_step = Some(p.t);
                self.step(p.t, &p.values)
            }
            None => Vec::new(),
        }
    }

    /// Evaluates one synchronous step with the given input values.
    pub fn push_step(&mut self, t: Timestamp, events: &[(&str, Value)]) -> Result<Vec<(String, TimedEvent)>, EvalError> {
        let mut out = self.flush();
        for (name, v) in events {
            out.extend(self.push_event(name, TimedEvent::new(t, *v))?);
        }
        out.extend(self.flush());
        Ok(out)
    }

    fn step(&mut self, t: Timestamp, inputs: &[Option<Value>]) -> Vec<(String, TimedEvent)> {
        let mut fired: Vec<Option<Value>> = vec![None; self.nodes.len()];
        for &id in &self.order {
            let node = &self.nodes[id];
            let known = |x: NodeId, fired: &[Option<Value>]| fired[x].or(self.known[x]);
            let lift = |deps: &[NodeId], fired: &[Option<Value>]| -> Option<Vec<Value>> {
                if !deps.iter().any(|&d| fired[d].is_some()) {
                    return None;
                }
                deps.iter().map(|&d| known(d, fired)).collect()
            };
            let v = match node.op {
                Op::Input(i) => inputs[i],
                Op::Const(_) => None,
                Op::Copy(a) | Op::Default(a, _) => fired[a],
                Op::Unary(op, a) => lift(&[a], &fired).and_then(|v| ops::unary(op, v[0]).ok()),
                Op::Abs(a) => lift(&[a], &fired).and_then(|v| ops::abs(v[0]).ok()),
                Op::Binary(op, a, b) => lift(&[a, b], &fired).and_then(|v| ops::binary(op, v[0], v[1]).ok()),
                Op::If(c, a, b) => lift(&[c, a, b], &fired).map(|v| if v[0] == Value::Bool(true) { v[1] } else { v[2] }),
                Op::Merge(a, b) => fired[a].or(fired[b]),
                Op::Last { values, trigger } => fired[trigger].and(self.known[values]),
                Op::Time(a) => fired[a].map(|_| Value::Float(t.as_secs_f64())),
            };
            fired[id] = v.and_then(|v| v.coerce(node.kind));
        }
        for (id, v) in fired.iter().enumerate() {
            if v.is_some() {
                self.known[id] = *v;
            }
        }
        self.outputs
            .iter()
            .filter_map(|(name, id)| fired[*id].map(|v| (name.clone(), TimedEvent::new(t, v))))
            .collect()
    }
}

/// Runs a whole trace through a fresh copy of `graph`.
pub fn run_trace(graph: &MonitorGraph, trace: &Trace) -> Result<Trace, EvalError> {
    let mut g = graph.clone();
    g.reset();
    let mut out = Trace::new();
    let emit = |evs: Vec<(String, TimedEvent)>, out: &mut Trace| {
        for (name, ev) in evs {
            out.push(&name, ev).expect("outputs are unique per step and ordered");
        }
    };
    for (name, ev) in trace {
        let evs = g.push_event(name, *ev)?;
        emit(evs, &mut out);
    }
    let evs = g.flush();
    emit(evs, &mut out);
    Ok(out)
}
