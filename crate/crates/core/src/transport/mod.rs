//! Ring-topology message passing.
//!
//! Every node talks only to its two ring neighbours. Sends are asynchronous;
//! receives block until the next message from the requested neighbour is
//! available. Delivery is reliable, ordered and exactly-once per direction.

mod loopback;
mod sim;
mod tcp;

use std::io;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use loopback::LoopbackTransport;
pub use sim::{sim_ring, Delivery, SimEndpoint};
pub use tcp::{config_hash, read_endpoints, TcpEndpoint, TcpOptions};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("peer disconnected")]
    Disconnected,
    #[error("receive on loopback with no pending message")]
    Empty,
    #[error("connect to {addr} timed out")]
    ConnectTimeout { addr: String },
    #[error("handshake rejected: {0}")]
    HandshakeRejected(String),
    #[error("bad endpoints config: {0}")]
    Config(String),
    #[error("message of {0} bytes exceeds the frame limit")]
    TooLarge(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Message counters kept by every transport.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransportStats {
    pub messages_sent: u64,
    pub messages_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

impl TransportStats {
    pub(crate) fn sent(&mut self, bytes: usize) {
        self.messages_sent += 1;
        self.bytes_sent += bytes as u64;
    }

    pub(crate) fn received(&mut self, bytes: usize) {
        self.messages_received += 1;
        self.bytes_received += bytes as u64;
    }
}

/// One node's endpoint on the ring.
pub trait RingTransport: Send {
    fn node_id(&self) -> usize;

    fn ring_size(&self) -> usize;

    fn send_left(&mut self, payload: Vec<u8>) -> Result<(), TransportError>;

    fn send_right(&mut self, payload: Vec<u8>) -> Result<(), TransportError>;

    /// Next message sent by the left neighbour through its `send_right`.
    fn recv_left(&mut self) -> Result<Vec<u8>, TransportError>;

    /// Next message sent by the right neighbour through its `send_left`.
    fn recv_right(&mut self) -> Result<Vec<u8>, TransportError>;

    fn stats(&self) -> TransportStats;
}

impl<T: RingTransport + ?Sized> RingTransport for Box<T> {
    fn node_id(&self) -> usize {
        (**self).node_id()
    }
    fn ring_size(&self) -> usize {
        (**self).ring_size()
    }
    fn send_left(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        (**self).send_left(payload)
    }
    fn send_right(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        (**self).send_right(payload)
    }
    fn recv_left(&mut self) -> Result<Vec<u8>, TransportError> {
        (**self).recv_left()
    }
    fn recv_right(&mut self) -> Result<Vec<u8>, TransportError> {
        (**self).recv_right()
    }
    fn stats(&self) -> TransportStats {
        (**self).stats()
    }
}

/// Latency model of the simulated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyProfile {
    /// One-way latency in seconds.
    pub tau: f64,
    /// Transfer time per payload byte, in seconds.
    pub per_byte: f64,
}

impl LatencyProfile {
    pub fn new(tau: f64, per_byte: f64) -> Option<Self> {
        (tau >= 0.0 && per_byte >= 0.0 && tau.is_finite() && per_byte.is_finite())
            .then_some(Self { tau, per_byte })
    }

    pub fn latency_only(tau: f64) -> Option<Self> {
        Self::new(tau, 0.0)
    }

    pub fn zero() -> Self {
        Self {
            tau: 0.0,
            per_byte: 0.0,
        }
    }

    /// Delay before a message of `bytes` becomes available to its receiver.
    pub fn delay(&self, bytes: usize) -> Duration {
        Duration::from_secs_f64(self.tau + self.per_byte * bytes as f64)
    }
}

pub const MIN_PING_REPS: usize = 16;

/// Estimates one-way latency as half the median ping round trip.
///
/// Collective over the ring: every node must call it with the same `reps`.
/// Node 0 pings its right neighbour, which echoes; other nodes only take
/// part when `p = 1`, where the ping travels the self-ring both ways. Returns
/// the estimate on node 0 and `None` elsewhere.
pub fn measure_latency(
    transport: &mut dyn RingTransport,
    reps: usize,
) -> Result<Option<f64>, TransportError> {
    let reps = reps.max(MIN_PING_REPS);
    let id = transport.node_id();
    let p = transport.ring_size();
    if p > 1 && id > 1 {
        return Ok(None);
    }
    if p > 1 && id == 1 {
        for _ in 0..reps {
            let msg = transport.recv_left()?;
            transport.send_left(msg)?;
        }
        return Ok(None);
    }
    let mut rtts = Vec::with_capacity(reps);
    for seq in 0..reps as u64 {
        let start = Instant::now();
        let payload = seq.to_le_bytes().to_vec();
        let echo = if p == 1 {
            transport.send_right(payload)?;
            let hop = transport.recv_left()?;
            transport.send_left(hop)?;
            transport.recv_right()?
        } else {
            transport.send_right(payload)?;
            transport.recv_right()?
        };
        rtts.push(start.elapsed().as_secs_f64());
        if echo != seq.to_le_bytes() {
            return Err(TransportError::HandshakeRejected(
                "ping echo out of order".into(),
            ));
        }
    }
    rtts.sort_by(f64::total_cmp);
    Ok(Some(0.5 * rtts[rtts.len() / 2]))
}
