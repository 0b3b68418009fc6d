//! Publish/subscribe transports: an in-process bus and an MQTT 3.1.1 client.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rumqttc::{Client, Event, MqttOptions, NetworkOptions, Packet, QoS};

pub type Handler = Arc<dyn Fn(&str, &[u8]) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("not connected")]
    NotConnected,
    #[error("bad broker url `{0}`")]
    BadUrl(String),
    #[error("client error: {0}")]
    Client(String),
    #[error("timed out connecting to {0}")]
    ConnectTimeout(String),
}

pub trait Transport: Send + Sync {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError>;
    fn subscribe(&self, topic: &str, handler: Handler) -> Result<(), TransportError>;
    fn is_connected(&self) -> bool;
}

/// Ordered, lossless, synchronous: `publish` returns after every handler of
/// the topic has run, in subscription order.
#[derive(Default)]
pub struct MemoryBus {
    handlers: RwLock<HashMap<String, Vec<Handler>>>,
}

impl MemoryBus {
    pub fn new() -> Arc<Self> {
        Arc::new(MemoryBus::default())
    }
}

impl Transport for MemoryBus {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        let hs = self.handlers.read().unwrap().get(topic).cloned().unwrap_or_default();
        for h in hs {
            h(topic, payload);
        }
        Ok(())
    }

    fn subscribe(&self, topic: &str, handler: Handler) -> Result<(), TransportError> {
        self.handlers.write().unwrap().entry(topic.to_string()).or_default().push(handler);
        Ok(())
    }

    fn is_connected(&self) -> bool {
        true
    }
}

/// `mqtt://host:port`, `tcp://host:port` or bare `host:port`.
pub fn parse_broker_url(s: &str) -> Result<(String, u16), TransportError> {
    let bad = || TransportError::BadUrl(s.to_string());
    let with_scheme = if s.contains("://") { s.to_string() } else { format!("mqtt://{s}") };
    let url = url::Url::parse(&with_scheme).map_err(|_| bad())?;
    if !matches!(url.scheme(), "mqtt" | "tcp") {
        return Err(bad());
    }
    let host = url.host_str().filter(|h| !h.is_empty()).ok_or_else(bad)?;
    Ok((host.to_string(), url.port().unwrap_or(1883)))
}

pub const BACKOFF_BASE: Duration = Duration::from_millis(500);
pub const BACKOFF_CAP: Duration = Duration::from_secs(8);

/// Next reconnect delay: doubles from 0.5 s, capped at 8 s.
pub fn next_backoff(current: Option<Duration>) -> Duration {
    current.map_or(BACKOFF_BASE, |d| (d * 2).min(BACKOFF_CAP))
}

struct Shared {
    connected: AtomicBool,
    stop: AtomicBool,
    handlers: RwLock<HashMap<String, Vec<Handler>>>,
    on_connection: Mutex<Option<Arc<dyn Fn(bool) + Send + Sync>>>,
}

impl Shared {
    fn set_connected(&self, up: bool) {
        if self.connected.swap(up, Ordering::SeqCst) != up {
            if let Some(cb) = self.on_connection.lock().unwrap().clone() {
                cb(up);
            }
        }
    }
}

/// MQTT client. A background thread drives the connection, dispatches
/// incoming publishes and reconnects with exponential backoff; every
/// subscription is renewed after each reconnect.
pub struct MqttTransport {
    client: Client,
    qos: QoS,
    shared: Arc<Shared>,
    worker: Mutex<Option<JoinHandle<()>>>,
    endpoint: String,
}

impl MqttTransport {
    /// Starts the client without waiting for the broker.
    pub fn start(url: &str, client_id: &str, qos: u8) -> Result<Self, TransportError> {
        let (host, port) = parse_broker_url(url)?;
        let mut opts = MqttOptions::new(client_id, host.clone(), port);
        opts.set_keep_alive(Duration::from_secs(5));
        opts.set_clean_session(true);
        opts.set_max_packet_size(1 << 20, 1 << 20);
        let qos = if qos == 0 { QoS::AtMostOnce } else { QoS::AtLeastOnce };
        let (client, mut connection) = Client::new(opts, 256);
        let mut net = NetworkOptions::new();
        net.set_tcp_nodelay(true);
        connection.eventloop.set_network_options(net);
        let shared = Arc::new(Shared {
            connected: AtomicBool::new(false),
            stop: AtomicBool::new(false),
            handlers: RwLock::new(HashMap::new()),
            on_connection: Mutex::new(None),
        });
        let sh = shared.clone();
        let resub = client.clone();
        let worker = std::thread::Builder::new()
            .name("mqtt-conn".into())
            .spawn(move || {
                let mut backoff = None;
                while !sh.stop.load(Ordering::SeqCst) {
                    match connection.recv_timeout(Duration::from_millis(100)) {
                        Err(rumqttc::RecvTimeoutError::Timeout) => {}
                        Err(rumqttc::RecvTimeoutError::Disconnected) => break,
                        Ok(Ok(Event::Incoming(Packet::ConnAck(_)))) => {
                            backoff = None;
                            for topic in sh.handlers.read().unwrap().keys() {
                                let _ = resub.try_subscribe(topic.clone(), qos);
                            }
                            sh.set_connected(true);
                        }
                        Ok(Ok(Event::Incoming(Packet::Publish(p)))) => {
                            let hs = sh.handlers.read().unwrap().get(&p.topic).cloned().unwrap_or_default();
                            for h in hs {
                                h(&p.topic, &p.payload);
                            }
                        }
                        Ok(Ok(_)) => {}
                        Ok(Err(e)) => {
                            sh.set_connected(false);
                            if sh.stop.load(Ordering::SeqCst) {
                                break;
                            }
                            let wait = next_backoff(backoff);
                            backoff = Some(wait);
                            log::warn!("mqtt connection error: {e}; retrying in {wait:?}");
                            sleep_unless(&sh.stop, wait);
                        }
                    }
                }
                sh.set_connected(false);
            })
            .map_err(|e| TransportError::Client(e.to_string()))?;
        Ok(MqttTransport { client, qos, shared, worker: Mutex::new(Some(worker)), endpoint: format!("{host}:{port}") })
    }

    /// Starts the client and waits for the first connection.
    pub fn connect(url: &str, client_id: &str, qos: u8, timeout: Duration) -> Result<Self, TransportError> {
        let t = Self::start(url, client_id, qos)?;
        if t.wait_connected(timeout) {
            Ok(t)
        } else {
            let ep = t.endpoint.clone();
            t.shutdown();
            Err(TransportError::ConnectTimeout(ep))
        }
    }

    pub fn wait_connected(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        while !self.is_connected() {
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        true
    }

    /// Called with `true` on (re)connect and `false` on loss.
    pub fn on_connection_change(&self, cb: Arc<dyn Fn(bool) + Send + Sync>) {
        *self.shared.on_connection.lock().unwrap() = Some(cb);
    }

    pub fn shutdown(&self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = self.client.try_disconnect();
        if let Some(w) = self.worker.lock().unwrap().take() {
            let _ = w.join();
        }
    }
}

impl Drop for MqttTransport {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn sleep_unless(stop: &AtomicBool, d: Duration) {
    let end = Instant::now() + d;
    while !stop.load(Ordering::SeqCst) && Instant::now() < end {
        std::thread::sleep(Duration::from_millis(20).min(end - Instant::now()));
    }
}

impl Transport for MqttTransport {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        if !self.is_connected() {
            return Err(TransportError::NotConnected);
        }
        self.client.publish(topic, self.qos, false, payload.to_vec()).map_err(|e| TransportError::Client(e.to_string()))
    }

    fn subscribe(&self, topic: &str, handler: Handler) -> Result<(), TransportError> {
        self.shared.handlers.write().unwrap().entry(topic.to_string()).or_default().push(handler);
        if self.is_connected() {
            self.client.subscribe(topic, self.qos).map_err(|e| TransportError::Client(e.to_string()))?;
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        self.shared.connected.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_bus_fifo_identical_payloads() {
        let bus = MemoryBus::new();
        let got = Arc::new(Mutex::new(Vec::new()));
        let g = got.clone();
        bus.subscribe("a", Arc::new(move |t, p| g.lock().unwrap().push((t.to_string(), p.to_vec())))).unwrap();
        for i in 0..5u8 {
            bus.publish("a", &[i]).unwrap();
            bus.publish("b", &[i]).unwrap();
        }
        let got = got.lock().unwrap();
        assert_eq!(got.len(), 5);
        assert!(got.iter().enumerate().all(|(i, (t, p))| t == "a" && p == &[i as u8]));
    }

    #[test]
    fn memory_bus_allows_nested_publish() {
        let bus = MemoryBus::new();
        let b2 = bus.clone();
        bus.subscribe("in", Arc::new(move |_, p| b2.publish("out", p).unwrap())).unwrap();
        let got = Arc::new(Mutex::new(Vec::new()));
        let g = got.clone();
        bus.subscribe("out", Arc::new(move |_, p| g.lock().unwrap().extend_from_slice(p))).unwrap();
        bus.publish("in", b"xy").unwrap();
        assert_eq!(&*got.lock().unwrap(), b"xy");
    }

    #[test]
    fn broker_urls() {
        assert_eq!(parse_broker_url("mqtt://localhost:1884").unwrap(), ("localhost".into(), 1884));
        assert_eq!(parse_broker_url("127.0.0.1:1883").unwrap(), ("127.0.0.1".into(), 1883));
        assert_eq!(parse_broker_url("tcp://broker").unwrap(), ("broker".into(), 1883));
        assert!(parse_broker_url("http://x:1").is_err());
        assert!(parse_broker_url("mqtt://").is_err());
    }

    #[test]
    fn backoff_doubles_to_cap() {
        let mut d = None;
        let mut seq = Vec::new();
        for _ in 0..7 {
            let n = next_backoff(d);
            seq.push(n.as_millis());
            d = Some(n);
        }
        assert_eq!(seq, [500, 1000, 2000, 4000, 8000, 8000, 8000]);
    }

    #[test]
    fn unconnected_publish_errors() {
        // Nothing listens on port 1 of localhost.
        let t = MqttTransport::start("mqtt://127.0.0.1:1", "t-unconnected", 1).unwrap();
        assert_eq!(t.publish("x", b"1"), Err(TransportError::NotConnected));
        assert!(!t.is_connected());
        t.shutdown();
    }
}
