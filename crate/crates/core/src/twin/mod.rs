//! The digital twin: ingest robot state over a transport, run the monitors,
//! log everything, send verdicts back.

mod config;
mod link;
mod service;
mod status;
mod store;
mod transport;

pub use config::{ConfigError, P2Engine, Topics, TwinConfig};
pub use link::{BusLink, DirectLink};
pub use service::{attach_inline, run_service, to_message, Counters, DtState, ServiceError, TwinService, LINEAR_CAP};
pub use status::StatusServer;
pub use store::{query_file, LogRecord, LogStore, RecordKind, StoreError, ALL_TIME};
pub use transport::{
    next_backoff, parse_broker_url, Handler, MemoryBus, MqttTransport, Transport, TransportError, BACKOFF_BASE,
    BACKOFF_CAP,
};
