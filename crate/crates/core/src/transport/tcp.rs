//! TCP ring transport.
//!
//! Node `k` listens on line `k` of the endpoints file, accepts one connection
//! from its left neighbour and dials its right neighbour. Each connection
//! carries both directions between one neighbour pair. Frames are a 32-bit
//! little-endian length followed by the payload bytes.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use super::{RingTransport, TransportError, TransportStats};

const MAGIC: &[u8; 4] = b"SWPT";
const VERSION: u16 = 1;
const HELLO_LEN: usize = 4 + 2 + 4 + 4 + 32;
const ACCEPT: u8 = 1;
const REJECT: u8 = 0;

#[derive(Debug, Clone, Copy)]
pub struct TcpOptions {
    pub connect_timeout: Duration,
    pub max_frame: usize,
}

impl Default for TcpOptions {
    fn default() -> Self {
        Self {
            connect_timeout: Duration::from_secs(30),
            max_frame: 1 << 30,
        }
    }
}

/// Reads an endpoints file: one `host:port` per non-blank line, line order
/// is node order.
pub fn read_endpoints(path: &Path) -> Result<Vec<String>, TransportError> {
    let text = std::fs::read_to_string(path)?;
    let endpoints: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();
    if endpoints.is_empty() {
        return Err(TransportError::Config(format!(
            "{} lists no endpoints",
            path.display()
        )));
    }
    Ok(endpoints)
}

/// SHA-256 of the endpoint list; peers must agree on it.
pub fn config_hash(endpoints: &[String]) -> [u8; 32] {
    let mut h = Sha256::new();
    for e in endpoints {
        h.update(e.as_bytes());
        h.update(b"\n");
    }
    h.finalize().into()
}

fn resolve(addr: &str) -> Result<SocketAddr, TransportError> {
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| TransportError::Config(format!("cannot resolve {addr}")))
}

fn hello(ring: usize, sender: usize, hash: &[u8; 32]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(HELLO_LEN);
    msg.extend_from_slice(MAGIC);
    msg.extend_from_slice(&VERSION.to_le_bytes());
    msg.extend_from_slice(&(ring as u32).to_le_bytes());
    msg.extend_from_slice(&(sender as u32).to_le_bytes());
    msg.extend_from_slice(hash);
    msg
}

fn check_hello(
    msg: &[u8; HELLO_LEN],
    ring: usize,
    expected_sender: usize,
    hash: &[u8; 32],
) -> Result<(), String> {
    if &msg[..4] != MAGIC {
        return Err("bad magic".into());
    }
    let version = u16::from_le_bytes([msg[4], msg[5]]);
    if version != VERSION {
        return Err(format!("protocol version {version}, expected {VERSION}"));
    }
    let their_ring = u32::from_le_bytes(msg[6..10].try_into().unwrap()) as usize;
    if their_ring != ring {
        return Err(format!("ring size {their_ring}, expected {ring}"));
    }
    let sender = u32::from_le_bytes(msg[10..14].try_into().unwrap()) as usize;
    if sender != expected_sender {
        return Err(format!("hello from node {sender}, expected {expected_sender}"));
    }
    if &msg[14..] != hash {
        return Err("endpoints config hash mismatch".into());
    }
    Ok(())
}

struct Link {
    reader: BufReader<TcpStream>,
    outbox: Option<Sender<Vec<u8>>>,
    writer: Option<JoinHandle<()>>,
    write_error: Arc<Mutex<Option<io::Error>>>,
}

impl Link {
    fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let (tx, rx) = channel::<Vec<u8>>();
        let write_error = Arc::new(Mutex::new(None));
        let err_slot = Arc::clone(&write_error);
        // Sends must not block the node: a ring of blocked writers deadlocks
        // once payloads outgrow the socket buffers.
        let writer = std::thread::spawn(move || {
            let mut out = BufWriter::new(stream);
            for payload in rx {
                let res = out
                    .write_all(&(payload.len() as u32).to_le_bytes())
                    .and_then(|_| out.write_all(&payload))
                    .and_then(|_| out.flush());
                if let Err(e) = res {
                    *err_slot.lock().unwrap() = Some(e);
                    return;
                }
            }
        });
        Ok(Self {
            reader,
            outbox: Some(tx),
            writer: Some(writer),
            write_error,
        })
    }

    fn check_writer(&self) -> Result<(), TransportError> {
        match self.write_error.lock().unwrap().take() {
            Some(e) => Err(TransportError::Io(e)),
            None => Ok(()),
        }
    }

    fn send(&mut self, payload: Vec<u8>, max: usize) -> Result<(), TransportError> {
        if payload.len() > max || payload.len() > u32::MAX as usize {
            return Err(TransportError::TooLarge(payload.len()));
        }
        self.check_writer()?;
        self.outbox
            .as_ref()
            .expect("outbox open until drop")
            .send(payload)
            .map_err(|_| TransportError::Disconnected)
    }

    fn recv(&mut self, max: usize) -> Result<Vec<u8>, TransportError> {
        let mut len = [0u8; 4];
        read_or_disconnect(&mut self.reader, &mut len)?;
        let len = u32::from_le_bytes(len) as usize;
        if len > max {
            return Err(TransportError::TooLarge(len));
        }
        let mut payload = vec![0u8; len];
        read_or_disconnect(&mut self.reader, &mut payload)?;
        Ok(payload)
    }
}

impl Drop for Link {
    fn drop(&mut self) {
        // flush queued frames before the socket closes
        self.outbox.take();
        if let Some(w) = self.writer.take() {
            let _ = w.join();
        }
    }
}

fn read_or_disconnect(r: &mut impl Read, buf: &mut [u8]) -> Result<(), TransportError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::BrokenPipe => TransportError::Disconnected,
        _ => TransportError::Io(e),
    })
}

/// A node's TCP endpoint with persistent connections to both neighbours.
pub struct TcpEndpoint {
    id: usize,
    ring: usize,
    left: Link,
    right: Link,
    max_frame: usize,
    stats: TransportStats,
}

impl TcpEndpoint {
    /// Binds this node's listed address and connects to both neighbours.
    pub fn connect(
        endpoints: &[String],
        id: usize,
        options: TcpOptions,
    ) -> Result<Self, TransportError> {
        let own = endpoints
            .get(id)
            .ok_or_else(|| TransportError::Config(format!("no endpoint for node {id}")))?;
        let listener = TcpListener::bind(resolve(own)?)?;
        Self::connect_with_listener(listener, endpoints, id, options)
    }

    /// Like [`TcpEndpoint::connect`] with an already bound listener.
    pub fn connect_with_listener(
        listener: TcpListener,
        endpoints: &[String],
        id: usize,
        options: TcpOptions,
    ) -> Result<Self, TransportError> {
        let ring = endpoints.len();
        if id >= ring {
            return Err(TransportError::Config(format!(
                "node id {id} out of range for {ring} endpoints"
            )));
        }
        let hash = config_hash(endpoints);
        let deadline = Instant::now() + options.connect_timeout;
        let left_id = (id + ring - 1) % ring;

        let acceptor = std::thread::spawn(move || accept_left(listener, ring, left_id, hash, deadline));
        let right = dial_right(endpoints, id, hash, deadline);
        let left = acceptor
            .join()
            .map_err(|_| TransportError::HandshakeRejected("acceptor panicked".into()))?;
        let (left, right) = (left?, right?);
        log::debug!("node {id}: ring of {ring} connected");
        Ok(Self {
            id,
            ring,
            left: Link::new(left)?,
            right: Link::new(right)?,
            max_frame: options.max_frame,
            stats: TransportStats::default(),
        })
    }
}

fn accept_left(
    listener: TcpListener,
    ring: usize,
    left_id: usize,
    hash: [u8; 32],
    deadline: Instant,
) -> Result<TcpStream, TransportError> {
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?.to_string();
    let mut stream = loop {
        match listener.accept() {
            Ok((s, _)) => break s,
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(TransportError::ConnectTimeout { addr: local });
                }
                std::thread::sleep(Duration::from_millis(1));
            }
            Err(e) => return Err(e.into()),
        }
    };
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(10))))?;
    let mut msg = [0u8; HELLO_LEN];
    stream.read_exact(&mut msg)?;
    stream.set_read_timeout(None)?;
    match check_hello(&msg, ring, left_id, &hash) {
        Ok(()) => {
            stream.write_all(&[ACCEPT])?;
            Ok(stream)
        }
        Err(reason) => {
            let _ = stream.write_all(&[REJECT]);
            Err(TransportError::HandshakeRejected(reason))
        }
    }
}

fn dial_right(
    endpoints: &[String],
    id: usize,
    hash: [u8; 32],
    deadline: Instant,
) -> Result<TcpStream, TransportError> {
    let ring = endpoints.len();
    let target = &endpoints[(id + 1) % ring];
    let addr = resolve(target)?;
    let mut stream = loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        if remaining.is_zero() {
            return Err(TransportError::ConnectTimeout {
                addr: target.clone(),
            });
        }
        match TcpStream::connect_timeout(&addr, remaining) {
            Ok(s) => break s,
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::ConnectionRefused | io::ErrorKind::TimedOut
                ) =>
            {
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    };
    stream.write_all(&hello(ring, id, &hash))?;
    let mut reply = [0u8; 1];
    match stream.read_exact(&mut reply) {
        Ok(()) if reply[0] == ACCEPT => Ok(stream),
        Ok(()) => Err(TransportError::HandshakeRejected(format!(
            "node {} refused the connection",
            (id + 1) % ring
        ))),
        Err(_) => Err(TransportError::HandshakeRejected(format!(
            "node {} closed during handshake",
            (id + 1) % ring
        ))),
    }
}

impl RingTransport for TcpEndpoint {
    fn node_id(&self) -> usize {
        self.id
    }

    fn ring_size(&self) -> usize {
        self.ring
    }

    fn send_left(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.stats.sent(payload.len());
        self.left.send(payload, self.max_frame)
    }

    fn send_right(&mut self, payload: Vec<u8>) -> Result<(), TransportError> {
        self.stats.sent(payload.len());
        self.right.send(payload, self.max_frame)
    }

    fn recv_left(&mut self) -> Result<Vec<u8>, TransportError> {
        let msg = self.left.recv(self.max_frame)?;
        self.stats.received(msg.len());
        Ok(msg)
    }

    fn recv_right(&mut self) -> Result<Vec<u8>, TransportError> {
        let msg = self.right.recv(self.max_frame)?;
        self.stats.received(msg.len());
        Ok(msg)
    }

    fn stats(&self) -> TransportStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_round_trip_and_rejections() {
        let hash = config_hash(&["a:1".into(), "b:2".into()]);
        let msg: [u8; HELLO_LEN] = hello(2, 1, &hash).try_into().unwrap();
        assert!(check_hello(&msg, 2, 1, &hash).is_ok());
        assert!(check_hello(&msg, 3, 1, &hash).is_err());
        assert!(check_hello(&msg, 2, 0, &hash).is_err());
        let other = config_hash(&["a:1".into(), "b:3".into()]);
        assert!(check_hello(&msg, 2, 1, &other)
            .unwrap_err()
            .contains("hash"));
    }

    #[test]
    fn config_hash_depends_on_order() {
        let a = config_hash(&["x:1".into(), "y:2".into()]);
        let b = config_hash(&["y:2".into(), "x:1".into()]);
        assert_ne!(a, b);
    }
}
