//! Stream monitor language: parsing, compilation to a dataflow graph, and
//! incremental evaluation over timestamped traces.

pub mod ast;
mod error;
mod graph;
pub mod ops;
mod parser;
mod trace;
mod value;

pub use ast::{Egress, Ingress, MonitorSpec};
pub use error::{EvalError, SpecError};
pub use graph::{compile, run_trace, MonitorGraph, Node, NodeId, Op};
pub use parser::parse_spec;
pub use trace::{format_trace, parse_trace, TimedEvent, Trace, TraceError};
pub use value::{Kind, ParseValueError, Timestamp, Value};
