//! P2 as a stream program, driven one state at a time.

use crate::msg::RobotStateMsg;
use crate::stream::{compile, parse_spec, EvalError, MonitorGraph, MonitorSpec, SpecError, Timestamp, Value};

use super::MonitorConfig;

pub const P2_SPEC: &str = include_str!("../../../../specs/p2_tolerance.tessla");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Outputs {
    pub diff: f64,
    pub violation: bool,
    pub adjusted: f64,
    pub changed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("state has no numeric field `{0}`")]
    MissingField(String),
    #[error("program produced no `{0}` output")]
    MissingOutput(&'static str),
}

/// Inputs are bound to state payload fields through their `@TelegrafIn`
/// annotation (or their own name). The sequence number is the logical
/// clock, in seconds.
#[derive(Debug, Clone)]
pub struct P2DslMonitor {
    graph: MonitorGraph,
    bindings: Vec<(String, String)>,
}

impl P2DslMonitor {
    pub fn new(cfg: &MonitorConfig) -> Result<Self, DslError> {
        Self::from_source(P2_SPEC, cfg)
    }

    pub fn from_source(src: &str, cfg: &MonitorConfig) -> Result<Self, DslError> {
        let mut spec = parse_spec(src)?;
        spec.set_constant("delta", Value::Float(cfg.delta))?;
        spec.set_constant("gain", Value::Float(cfg.gain))?;
        spec.set_constant("vMax", Value::Float(cfg.v_max))?;
        spec.set_constant("oneSided", Value::Bool(cfg.p2_one_sided))?;
        let bindings = bindings(&spec);
        Ok(P2DslMonitor { graph: compile(&spec)?, bindings })
    }

    pub fn step(&mut self, seq: u64, expected: f64, actual: f64) -> Result<P2Outputs, DslError> {
        let json = serde_json::json!({ "expectedSpeed": expected, "actualSpeed": actual });
        self.step_json(seq, &json)
    }

    pub fn step_state(&mut self, state: &RobotStateMsg) -> Result<P2Outputs, DslError> {
        let json = serde_json::to_value(state).expect("state serializes");
        self.step_json(state.seq, &json)
    }

    fn step_json(&mut self, seq: u64, json: &serde_json::Value) -> Result<P2Outputs, DslError> {
        let mut events = Vec::with_capacity(self.bindings.len());
        for (stream, field) in &self.bindings {
            let v = json.get(field).and_then(|v| v.as_f64()).ok_or_else(|| DslError::MissingField(field.clone()))?;
            events.push((stream.as_str(), Value::Float(v)));
        }
        let t = Timestamp::from_secs(seq as i64).expect("seq fits the clock");
        let out = self.graph.push_step(t, &events)?;
        let get = |name: &'static str| {
            out.iter().find(|(n, _)| n == name).map(|(_, e)| e.value).ok_or(DslError::MissingOutput(name))
        };
        let num = |name| get(name).map(|v| v.as_f64().unwrap_or(f64::NAN));
        let flag = |name| get(name).map(|v| v.as_bool().unwrap_or(false));
        Ok(P2Outputs { diff: num("diff")?, violation: flag("violation")?, adjusted: num("adjusted")?, changed: flag("changed")? })
    }
}

fn bindings(spec: &MonitorSpec) -> Vec<(String, String)> {
    spec.inputs
        .iter()
        .map(|i| (i.name.clone(), i.ingress.as_ref().map_or_else(|| i.name.clone(), |g| g.field.clone())))
        .collect()
}
