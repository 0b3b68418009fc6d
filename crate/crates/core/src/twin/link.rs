//! Robot-side ends of the twin connection.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError};

use super::config::Topics;
use super::service::TwinService;
use super::transport::Transport;
use crate::msg::{RobotStateMsg, VerdictMsg};
use crate::sim::{LinkError, TwinLink};

/// Calls the twin in-process, still through the JSON payload path.
pub struct DirectLink {
    pub service: TwinService,
}

impl TwinLink for DirectLink {
    fn exchange(&mut self, state: &RobotStateMsg) -> Result<Option<VerdictMsg>, LinkError> {
        let payload = serde_json::to_vec(state).map_err(|e| LinkError::Transport(e.to_string()))?;
        Ok(self.service.ingest_payload(&payload))
    }
}

/// Publishes the state and waits for the verdict echoing its seq.
pub struct BusLink {
    transport: Arc<dyn Transport>,
    state_topic: String,
    verdicts: Receiver<VerdictMsg>,
    timeout: Duration,
}

impl BusLink {
    pub fn new(transport: Arc<dyn Transport>, topics: &Topics, timeout: Duration) -> Result<Self, LinkError> {
        let (tx, rx) = crossbeam_channel::unbounded();
        transport
            .subscribe(
                &topics.action,
                Arc::new(move |_, payload| match serde_json::from_slice::<VerdictMsg>(payload) {
                    Ok(v) => {
                        let _ = tx.send(v);
                    }
                    Err(e) => log::warn!("undecodable verdict: {e}"),
                }),
            )
            .map_err(|e| LinkError::Transport(e.to_string()))?;
        Ok(BusLink { transport, state_topic: topics.state.clone(), verdicts: rx, timeout })
    }
}

impl TwinLink for BusLink {
    fn exchange(&mut self, state: &RobotStateMsg) -> Result<Option<VerdictMsg>, LinkError> {
        while self.verdicts.try_recv().is_ok() {}
        let payload = serde_json::to_vec(state).map_err(|e| LinkError::Transport(e.to_string()))?;
        self.transport.publish(&self.state_topic, &payload).map_err(|e| LinkError::Transport(e.to_string()))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.verdicts.recv_timeout(left) {
                Ok(v) if v.seq == state.seq => return Ok(Some(v)),
                Ok(v) => log::debug!("ignoring verdict seq {} while waiting for {}", v.seq, state.seq),
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => return Err(LinkError::Transport("verdict channel closed".into())),
            }
        }
    }
}
