use std::collections::VecDeque;

use super::{RingTransport, TransportError, TransportStats};

/// Zero-latency single-node ring.
///
/// `send_left` feeds `recv_right` and `send_right` feeds `recv_left`, FIFO.
#[derive(Debug, Default)]
pub struct LoopbackTransport {
    from_left: VecDeque<Vec<u8>>,
    from_right: VecDeque<Vec<u8>>,
    stats: TransportStats,
}

impl LoopbackTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

impl RingTransport for LoopbackTransport {
    fn node_id(&self) -> usize {
        0
    }

    fn ring_size(&self) -> usize {
        1
    }

    fn send_left(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.stats.sent(payload.len());
        self.from_right.push_back(payload);
        Ok(())
    }

    fn send_right(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.stats.sent(payload.len());
        self.from_left.push_back(payload);
        Ok(())
    }

    fn recv_left(&mut self) -> Result<Vec<u8>, TransportError> {
        let msg = self.from_left.pop_front().ok_or(TransportError::Empty)?;
        self.stats.received(msg.len());
        Ok(msg)
    }

    fn recv_right(&mut self) -> Result<Vec<u8>, TransportError> {
        let msg = self.from_right.pop_front().ok_or(TransportError::Empty)?;
        self.stats.received(msg.len());
        Ok(msg)
    }

    fn stats(&self) -> TransportStats {
        self.stats
    }
}
