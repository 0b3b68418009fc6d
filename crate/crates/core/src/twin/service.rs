//! The twin pipeline: decode, deduplicate, store, evaluate, publish.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError};

use super::config::{P2Engine, TwinConfig};
use super::status::StatusServer;
use super::store::{LogRecord, LogStore, RecordKind};
use super::transport::{Transport, TransportError};
use crate::monitors::{decide_p2, evaluate_with, DslError, MonitorConfig, P2Decision, P2DslMonitor, Verdict};
use crate::msg::{RobotStateMsg, VerdictMsg};

/// Hard ceiling on outgoing linear speed, m/s.
pub const LINEAR_CAP: f64 = 0.22;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("status endpoint: {0}")]
    Status(std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub messages_in: u64,
    pub accepted: u64,
    pub stale: u64,
    pub dead_letters: u64,
    pub verdicts_out: u64,
    pub publish_failures: u64,
    pub p1_violations: u64,
    pub p2_violations: u64,
    pub p3_faulty_scans: u64,
    pub latency_total: Duration,
}

impl Counters {
    pub fn mean_latency(&self) -> Duration {
        if self.verdicts_out == 0 {
            Duration::ZERO
        } else {
            self.latency_total / self.verdicts_out as u32
        }
    }

    pub fn render(&self, connected: bool, store_degraded: bool) -> String {
        format!(
            "connected {connected}\nstore_degraded {store_degraded}\nmessages_in {}\naccepted {}\nstale {}\n\
             dead_letters {}\nverdicts_out {}\npublish_failures {}\nviolations_p1 {}\nviolations_p2 {}\n\
             faulty_scans_p3 {}\nmean_latency_us {}\n",
            self.messages_in,
            self.accepted,
            self.stale,
            self.dead_letters,
            self.verdicts_out,
            self.publish_failures,
            self.p1_violations,
            self.p2_violations,
            self.p3_faulty_scans,
            self.mean_latency().as_micros(),
        )
    }
}

/// Mirrored robot state plus everything the twin derives from it.
#[derive(Debug, Clone, Default)]
pub struct DtState {
    pub latest: Option<RobotStateMsg>,
    pub last_verdict: Option<VerdictMsg>,
    pub counters: Counters,
}

pub struct TwinService {
    cfg: TwinConfig,
    state: DtState,
    store: LogStore,
    dsl: Option<P2DslMonitor>,
    publisher: Option<Arc<dyn Transport>>,
}

impl TwinService {
    pub fn new(cfg: TwinConfig, store: LogStore) -> Result<Self, ServiceError> {
        let dsl = match cfg.p2_engine {
            P2Engine::Direct => None,
            P2Engine::Dsl => Some(P2DslMonitor::new(&cfg.monitor)?),
        };
        Ok(TwinService { cfg, state: DtState::default(), store, dsl, publisher: None })
    }

    /// Verdicts are published here on the configured action topic.
    pub fn set_publisher(&mut self, transport: Arc<dyn Transport>) {
        self.publisher = Some(transport);
    }

    pub fn config(&self) -> &TwinConfig {
        &self.cfg
    }

    pub fn state(&self) -> &DtState {
        &self.state
    }

    pub fn counters(&self) -> &Counters {
        &self.state.counters
    }

    pub fn store(&self) -> &LogStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut LogStore {
        &mut self.store
    }

    /// Full pipeline for one raw payload. Returns the published verdict, or
    /// `None` for dead letters and stale sequence numbers.
    pub fn ingest_payload(&mut self, payload: &[u8]) -> Option<VerdictMsg> {
        let started = Instant::now();
        self.state.counters.messages_in += 1;
        let decoded = serde_json::from_slice::<RobotStateMsg>(payload)
            .map_err(|e| e.to_string())
            .and_then(|m| m.validate().map(|_| m).map_err(|e| e.to_string()));
        match decoded {
            Ok(msg) => self.accept(msg, started),
            Err(err) => {
                self.dead_letter(payload, &err);
                None
            }
        }
    }

    /// Pipeline for an already decoded state.
    pub fn ingest(&mut self, msg: RobotStateMsg) -> Option<VerdictMsg> {
        let started = Instant::now();
        self.state.counters.messages_in += 1;
        match msg.validate() {
            Ok(()) => self.accept(msg, started),
            Err(e) => {
                let raw = serde_json::to_vec(&msg).unwrap_or_default();
                self.dead_letter(&raw, &e.to_string());
                None
            }
        }
    }

    fn dead_letter(&mut self, payload: &[u8], err: &str) {
        log::warn!("dead letter: {err}");
        self.state.counters.dead_letters += 1;
        let t = self.state.latest.as_ref().map_or(0.0, |m| m.t);
        let data = serde_json::json!({ "error": err, "payload": String::from_utf8_lossy(payload) });
        self.store.append(&LogRecord { kind: RecordKind::Deadletter, seq: None, t, data });
    }

    fn accept(&mut self, msg: RobotStateMsg, started: Instant) -> Option<VerdictMsg> {
        if let Some(last) = &self.state.latest {
            if msg.seq <= last.seq {
                log::warn!("dropping stale state seq {} (last {})", msg.seq, last.seq);
                self.state.counters.stale += 1;
                return None;
            }
        }
        self.state.counters.accepted += 1;
        self.store.append(&LogRecord {
            kind: RecordKind::State,
            seq: Some(msg.seq),
            t: msg.t,
            data: serde_json::to_value(&msg).expect("state serializes"),
        });
        let verdict = self.on_state_change(&msg);
        self.state.latest = Some(msg);
        self.publish(&verdict);
        self.store.append(&LogRecord {
            kind: RecordKind::Verdict,
            seq: Some(verdict.seq),
            t: verdict.t,
            data: serde_json::to_value(&verdict).expect("verdict serializes"),
        });
        let c = &mut self.state.counters;
        c.verdicts_out += 1;
        c.latency_total += started.elapsed();
        self.state.last_verdict = Some(verdict.clone());
        Some(verdict)
    }

    fn p2(&mut self, msg: &RobotStateMsg) -> P2Decision {
        let cfg = &self.cfg.monitor;
        match &mut self.dsl {
            None => decide_p2(msg.expected_speed, msg.actual_speed, cfg),
            Some(m) => match m.step_state(msg) {
                Ok(o) => P2Decision { ok: !o.violation, diff: o.diff, adjusted: o.adjusted },
                Err(e) => {
                    log::error!("stream monitor failed on seq {}: {e}; using direct P2", msg.seq);
                    decide_p2(msg.expected_speed, msg.actual_speed, cfg)
                }
            },
        }
    }

    fn on_state_change(&mut self, msg: &RobotStateMsg) -> VerdictMsg {
        let p2 = self.p2(msg);
        let v = evaluate_with(msg, &self.cfg.monitor, p2).expect("validated state has a full scan");
        let c = &mut self.state.counters;
        c.p1_violations += !v.p1_ok as u64;
        c.p2_violations += !v.p2_ok as u64;
        c.p3_faulty_scans += !v.faulty_beams.is_empty() as u64;
        to_message(msg, &v, &self.cfg.monitor)
    }

    fn publish(&mut self, v: &VerdictMsg) {
        let Some(t) = &self.publisher else { return };
        let payload = serde_json::to_vec(v).expect("verdict serializes");
        let topic = &self.cfg.topics.action;
        if let Err(first) = t.publish(topic, &payload) {
            log::warn!("publishing verdict {} failed ({first}), retrying", v.seq);
            if let Err(e) = t.publish(topic, &payload) {
                log::error!("verdict {} not delivered: {e}", v.seq);
                self.state.counters.publish_failures += 1;
            }
        }
    }
}

/// Wire form of a verdict. The linear speed is capped here as well.
pub fn to_message(state: &RobotStateMsg, v: &Verdict, cfg: &MonitorConfig) -> VerdictMsg {
    let mut action = v.action;
    action.linear = action.linear.clamp(0.0, cfg.v_max.min(LINEAR_CAP));
    VerdictMsg {
        seq: state.seq,
        t: state.t,
        p1_ok: v.p1_ok,
        p2_ok: v.p2_ok,
        faulty_beams: v.faulty_beams.iter().copied().collect(),
        approved: v.approved,
        action,
    }
}

/// Subscribes the service to the state topic and runs the pipeline inside
/// the transport callback, serialized by the returned mutex.
pub fn attach_inline(mut service: TwinService, transport: Arc<dyn Transport>) -> Result<Arc<Mutex<TwinService>>, ServiceError> {
    service.set_publisher(transport.clone());
    let topic = service.config().topics.state.clone();
    let shared = Arc::new(Mutex::new(service));
    let s = shared.clone();
    transport.subscribe(&topic, Arc::new(move |_, payload| {
        s.lock().unwrap().ingest_payload(payload);
    }))?;
    Ok(shared)
}

/// Runs until `shutdown` is set. Transport callbacks only enqueue; one
/// loop drains the inbox in arrival order.
pub fn run_service(
    mut service: TwinService,
    transport: Arc<dyn Transport>,
    shutdown: Arc<AtomicBool>,
) -> Result<Counters, ServiceError> {
    service.set_publisher(transport.clone());
    let (tx, rx) = crossbeam_channel::unbounded::<Vec<u8>>();
    let topic = service.config().topics.state.clone();
    transport.subscribe(&topic, Arc::new(move |_, payload| {
        let _ = tx.send(payload.to_vec());
    }))?;

    let page = Arc::new(Mutex::new(String::new()));
    let status = match &service.config().status_addr {
        Some(addr) => Some(StatusServer::start(addr, page.clone()).map_err(ServiceError::Status)?),
        None => None,
    };
    if let Some(s) = &status {
        log::info!("status page on {}", s.local_addr());
    }
    drain(&mut service, &rx, &transport, &page, &shutdown);
    service.store_mut().flush();
    if let Some(s) = status {
        s.stop();
    }
    Ok(service.counters().clone())
}

fn drain(
    service: &mut TwinService,
    rx: &Receiver<Vec<u8>>,
    transport: &Arc<dyn Transport>,
    page: &Mutex<String>,
    shutdown: &AtomicBool,
) {
    let render = |s: &TwinService| s.counters().render(transport.is_connected(), s.store().is_degraded());
    *page.lock().unwrap() = render(service);
    while !shutdown.load(Ordering::SeqCst) {
        match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(payload) => {
                service.ingest_payload(&payload);
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        *page.lock().unwrap() = render(service);
    }
}
