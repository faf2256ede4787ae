use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::{Duration, Instant};

use super::{LatencyProfile, RingTransport, TransportError, TransportStats};

struct Envelope {
    payload: Vec<u8>,
    sent_at: Instant,
    available_at: Instant,
}

/// Timestamps of one delivered message, recorded when logging is enabled.
#[derive(Debug, Clone, Copy)]
pub struct Delivery {
    pub sent_at: Instant,
    pub available_at: Instant,
    pub received_at: Instant,
    pub bytes: usize,
}

impl Delivery {
    pub fn transit(&self) -> Duration {
        self.received_at - self.sent_at
    }
}

/// In-process ring endpoint with injected latency.
///
/// A message becomes visible to its receiver no earlier than
/// `send time + tau + bytes * per_byte`. The sender never waits.
pub struct SimEndpoint {
    id: usize,
    ring: usize,
    profile: LatencyProfile,
    to_left: Sender<Envelope>,
    to_right: Sender<Envelope>,
    from_left: Receiver<Envelope>,
    from_right: Receiver<Envelope>,
    stats: TransportStats,
    log: Option<Vec<Delivery>>,
}

/// Builds `p` connected endpoints; endpoint `k` is node `k`.
pub fn sim_ring(p: usize, profile: LatencyProfile) -> Vec<SimEndpoint> {
    assert!(p >= 1, "a ring needs at least one node");
    let (left_tx, left_rx): (Vec<_>, Vec<_>) = (0..p).map(|_| channel()).unzip();
    let (right_tx, right_rx): (Vec<_>, Vec<_>) = (0..p).map(|_| channel()).unzip();
    left_rx
        .into_iter()
        .zip(right_rx)
        .enumerate()
        .map(|(k, (from_left, from_right))| SimEndpoint {
            id: k,
            ring: p,
            profile,
            // my left neighbour hears me on its right, and vice versa
            to_left: right_tx[(k + p - 1) % p].clone(),
            to_right: left_tx[(k + 1) % p].clone(),
            from_left,
            from_right,
            stats: TransportStats::default(),
            log: None,
        })
        .collect()
}

impl SimEndpoint {
    pub fn profile(&self) -> LatencyProfile {
        self.profile
    }

    /// Starts recording per-message timestamps.
    pub fn record_deliveries(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn deliveries(&self) -> &[Delivery] {
        self.log.as_deref().unwrap_or(&[])
    }

    fn send(&mut self, to_right: bool, payload: Vec<u8>) -> Result<(), TransportError> {
        let sent_at = Instant::now();
        let available_at = sent_at + self.profile.delay(payload.len());
        self.stats.sent(payload.len());
        let tx = if to_right { &self.to_right } else { &self.to_left };
        tx.send(Envelope {
            payload,
            sent_at,
            available_at,
        })
        .map_err(|_| TransportError::Disconnected)
    }

    fn recv(&mut self, from_left: bool) -> Result<Vec<u8>, TransportError> {
        let rx = if from_left {
            &self.from_left
        } else {
            &self.from_right
        };
        let env = rx.recv().map_err(|_| TransportError::Disconnected)?;
        wait_until(env.available_at);
        let received_at = Instant::now();
        self.stats.received(env.payload.len());
        if let Some(log) = &mut self.log {
            log.push(Delivery {
                sent_at: env.sent_at,
                available_at: env.available_at,
                received_at,
                bytes: env.payload.len(),
            });
        }
        Ok(env.payload)
    }
}

impl RingTransport for SimEndpoint {
    fn node_id(&self) -> usize {
        self.id
    }

    fn ring_size(&self) -> usize {
        self.ring
    }

    fn send_left(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.send(false, payload)
    }

    fn send_right(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.send(true, payload)
    }

    fn recv_left(&mut self) -> Result<Vec<u8>, TransportError> {
        self.recv(true)
    }

    fn recv_right(&mut self) -> Result<Vec<u8>, TransportError> {
        self.recv(false)
    }

    fn stats(&self) -> TransportStats {
        self.stats
    }
}

/// Sleeps until `deadline`. Never returns early.
fn wait_until(deadline: Instant) {
    tighten_timer_slack();
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        std::thread::sleep(deadline - now);
    }
}

/// Linux rounds sleeps up by the thread's timer slack (50 us by default),
/// which is a third of the EC2 latency being simulated.
#[cfg(target_os = "linux")]
fn tighten_timer_slack() {
    use std::cell::Cell;
    thread_local!(static DONE: Cell<bool> = const { Cell::new(false) });
    DONE.with(|done| {
        if !done.get() {
            // SAFETY: PR_SET_TIMERSLACK only changes the calling thread's slack.
            unsafe {
                libc::prctl(libc::PR_SET_TIMERSLACK, 1 as libc::c_ulong, 0, 0, 0);
            }
            done.set(true);
        }
    });
}

#[cfg(not(target_os = "linux"))]
fn tighten_timer_slack() {}
