//! Random monitor programs and traces for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rvtwin::stream::{Kind, TimedEvent, Timestamp, Trace, Value};

const KINDS: [Kind; 3] = [Kind::Int, Kind::Float, Kind::Bool];

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Int => "Int",
        Kind::Float => "Float",
        Kind::Bool => "Bool",
    }
}

pub struct GenSpec {
    pub source: String,
    pub inputs: Vec<(String, Kind)>,
}

struct Ctx<'a> {
    rng: &'a mut ChaCha8Rng,
    /// Streams usable anywhere: inputs and earlier definitions.
    visible: Vec<(String, Kind)>,
    /// Every definition, including later ones, for `last` value operands.
    all_defs: Vec<(String, Kind)>,
    inputs: Vec<(String, Kind)>,
}

impl Ctx<'_> {
    fn literal(&mut self, k: Kind) -> String {
        match k {
            Kind::Int => self.rng.gen_range(-3i64..=3).to_string(),
            Kind::Float => Value::Float(self.rng.gen_range(-4i32..=4) as f64 * 0.5).to_string(),
            Kind::Bool => self.rng.gen_bool(0.5).to_string(),
        }
    }

    fn leaf(&mut self, k: Kind) -> String {
        let names: Vec<String> = self.visible.iter().filter(|(_, vk)| *vk == k).map(|(n, _)| n.clone()).collect();
        if !names.is_empty() && self.rng.gen_bool(0.8) {
            names.choose(self.rng).unwrap().clone()
        } else {
            self.literal(k)
        }
    }

    fn any_kind(&mut self) -> Kind {
        *KINDS.choose(self.rng).unwrap()
    }

    fn numeric(&mut self) -> Kind {
        if self.rng.gen_bool(0.5) {
            Kind::Int
        } else {
            Kind::Float
        }
    }

    fn last_operand(&mut self, k: Kind) -> String {
        let mut pool: Vec<String> = self.all_defs.iter().filter(|(_, dk)| *dk == k).map(|(n, _)| n.clone()).collect();
        pool.extend(self.inputs.iter().filter(|(_, ik)| *ik == k).map(|(n, _)| n.clone()));
        pool.choose(self.rng).cloned().unwrap_or_else(|| self.literal(k))
    }

    fn expr(&mut self, k: Kind, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(k);
        }
        let d = depth - 1;
        // Shared shapes for every kind.
        match self.rng.gen_range(0..10) {
            0 => {
                let c = self.expr(Kind::Bool, d);
                let a = self.expr(k, d);
                let b = self.expr(k, d);
                return format!("(if {c} then {a} else {b})");
            }
            1 => {
                let a = self.expr(k, d);
                let b = self.expr(k, d);
                return format!("merge({a}, {b})");
            }
            2 => {
                let a = self.expr(k, d);
                let v = self.literal(k);
                return format!("default({a}, {v})");
            }
            3 => {
                let v = self.last_operand(k);
                let tk = self.any_kind();
                let t = self.expr(tk, d);
                return format!("last({v}, {t})");
            }
            _ => {}
        }
        match k {
            Kind::Int => match self.rng.gen_range(0..5) {
                0 => format!("-{}", self.paren(Kind::Int, d)),
                1 => format!("abs({})", self.expr(Kind::Int, d)),
                2 => {
                    let f = if self.rng.gen_bool(0.5) { "min" } else { "max" };
                    format!("{f}({}, {})", self.expr(Kind::Int, d), self.expr(Kind::Int, d))
                }
                _ => {
                    let op = ["+", "-", "*"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Kind::Int, d), self.expr(Kind::Int, d))
                }
            },
            Kind::Float => match self.rng.gen_range(0..6) {
                0 => format!("-{}", self.paren(Kind::Float, d)),
                1 => format!("abs({})", self.expr(Kind::Float, d)),
                2 => {
                    let ak = self.any_kind();
                    format!("time({})", self.expr(ak, d))
                }
                3 => {
                    let (ka, kb) = (self.numeric(), self.numeric());
                    format!("({} / {})", self.expr(ka, d), self.expr(kb, d))
                }
                _ => {
                    // One operand is Float so the result is Float.
                    let other = self.numeric();
                    let (a, b) = (self.expr(Kind::Float, d), self.expr(other, d));
                    let (a, b) = if self.rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    let op = ["+", "-", "*", "min", "max"].choose(self.rng).unwrap();
                    match *op {
                        "min" | "max" => format!("{op}({a}, {b})"),
                        _ => format!("({a} {op} {b})"),
                    }
                }
            },
            Kind::Bool => match self.rng.gen_range(0..5) {
                0 => format!("!{}", self.paren(Kind::Bool, d)),
                1 => {
                    let op = ["&&", "||"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Kind::Bool, d), self.expr(Kind::Bool, d))
                }
                2 => {
                    let ek = self.any_kind();
                    let op = ["==", "!="].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(ek, d), self.expr(ek, d))
                }
                _ => {
                    let (ka, kb) = (self.numeric(), self.numeric());
                    let op = ["<", "<=", ">", ">="].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(ka, d), self.expr(kb, d))
                }
            },
        }
    }

    fn paren(&mut self, k: Kind, d: usize) -> String {
        format!("({})", self.expr(k, d))
    }
}

/// Random well-kinded program with expression depth at most `max_depth`.
pub fn random_spec(rng: &mut ChaCha8Rng, max_depth: usize) -> GenSpec {
    let n_inputs = rng.gen_range(1..=3);
    let inputs: Vec<(String, Kind)> =
        (0..n_inputs).map(|i| (format!("in{i}"), *KINDS.choose(rng).unwrap())).collect();
    let n_defs = rng.gen_range(1..=4);
    let all_defs: Vec<(String, Kind)> = (0..n_defs).map(|i| (format!("d{i}"), *KINDS.choose(rng).unwrap())).collect();

    let mut src = String::new();
    for (n, k) in &inputs {
        src.push_str(&format!("in {n}: Events[{}]\n", kind_name(*k)));
    }
    let mut ctx = Ctx { rng, visible: inputs.clone(), all_defs: all_defs.clone(), inputs: inputs.clone() };
    for (n, k) in &all_defs {
        let depth = ctx.rng.gen_range(1..=max_depth);
        let body = ctx.expr(*k, depth);
        src.push_str(&format!("def {n}: Events[{}] = {body}\n", kind_name(*k)));
        ctx.visible.push((n.clone(), *k));
    }
    for (n, _) in &all_defs {
        src.push_str(&format!("out {n}\n"));
    }
    if ctx.rng.gen_bool(0.3) {
        src.push_str(&format!("out {}\n", inputs[0].0));
    }
    GenSpec { source: src, inputs }
}

/// Random trace over `inputs` with at most `max_events` events.
pub fn random_trace(rng: &mut ChaCha8Rng, inputs: &[(String, Kind)], max_events: usize) -> Trace {
    let mut trace = Trace::new();
    let mut t: i64 = 0;
    let target = rng.gen_range(0..=max_events);
    while trace.len() < target {
        t += rng.gen_range(1..=3) * 250_000_000;
        let ts = Timestamp::from_nanos(t).unwrap();
        for (name, k) in inputs {
            if trace.len() >= target || !rng.gen_bool(0.6) {
                continue;
            }
            let v = match k {
                Kind::Int => Value::Int(rng.gen_range(-5..=5)),
                Kind::Float => Value::Float(rng.gen_range(-8i32..=8) as f64 * 0.25),
                Kind::Bool => Value::Bool(rng.gen_bool(0.5)),
            };
            trace.push(name, TimedEvent::new(ts, v)).unwrap();
        }
    }
    trace
}
