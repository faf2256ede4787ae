use std::net::TcpListener;
use std::time::Duration;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use swept_core::engines::{run_ring, run_serial, DecompositionPlan, Engine, EngineOptions};
use swept_core::schemes;
use swept_core::transport::{
    measure_latency, sim_ring, LatencyProfile, RingTransport, TcpEndpoint, TcpOptions,
    TransportError,
};

fn payload(rng: &mut StdRng, seq: u32) -> Vec<u8> {
    let len = rng.gen_range(4..2048);
    let mut v = vec![0u8; len];
    rng.fill(&mut v[..]);
    v[..4].copy_from_slice(&seq.to_le_bytes());
    v
}

/// Node 0 streams to node 1 while node 1 checks order and content.
fn soak(mut eps: Vec<impl RingTransport + 'static>, count: u32) {
    let mut b = eps.remove(1);
    let mut a = eps.remove(0);
    let sender = std::thread::spawn(move || {
        let mut rng = StdRng::seed_from_u64(7);
        for seq in 0..count {
            a.send_right(payload(&mut rng, seq)).unwrap();
        }
        a
    });
    let mut rng = StdRng::seed_from_u64(7);
    for seq in 0..count {
        assert_eq!(b.recv_left().unwrap(), payload(&mut rng, seq));
    }
    let a = sender.join().unwrap();
    assert_eq!(a.stats().messages_sent, count as u64);
    assert_eq!(b.stats().messages_received, count as u64);
    assert_eq!(a.stats().bytes_sent, b.stats().bytes_received);
}

#[test]
fn sim_soak_ten_thousand_messages() {
    soak(sim_ring(3, LatencyProfile::zero()), 10_000);
}

fn local_endpoints(p: usize) -> (Vec<TcpListener>, Vec<String>) {
    let listeners: Vec<TcpListener> = (0..p)
        .map(|_| TcpListener::bind("127.0.0.1:0").unwrap())
        .collect();
    let endpoints = listeners
        .iter()
        .map(|l| l.local_addr().unwrap().to_string())
        .collect();
    (listeners, endpoints)
}

fn tcp_ring(p: usize) -> Vec<TcpEndpoint> {
    let (listeners, endpoints) = local_endpoints(p);
    let handles: Vec<_> = listeners
        .into_iter()
        .enumerate()
        .map(|(id, l)| {
            let endpoints = endpoints.clone();
            std::thread::spawn(move || {
                TcpEndpoint::connect_with_listener(l, &endpoints, id, TcpOptions::default())
            })
        })
        .collect();
    handles
        .into_iter()
        .map(|h| h.join().unwrap().unwrap())
        .collect()
}

#[test]
fn tcp_soak_ten_thousand_messages() {
    soak(tcp_ring(3), 10_000);
}

#[test]
fn tcp_swept_matches_serial() {
    for p in [1, 2] {
        let plan = DecompositionPlan::per_node(32, p).unwrap();
        let kernel = schemes::build("ks", plan.total(), None).unwrap();
        let t = 3 * 32 + 5;
        let serial = run_serial(kernel.as_ref(), plan.total(), t).unwrap();
        for engine in [Engine::Swept, Engine::Classic] {
            let out = run_ring(
                engine,
                kernel.as_ref(),
                &plan,
                t,
                tcp_ring(p),
                &EngineOptions::default(),
            )
            .unwrap();
            assert!(out.field.bitwise_eq(&serial), "{engine} over tcp, p={p}");
        }
    }
}

#[test]
fn tcp_rejects_mismatched_configuration() {
    let (mut listeners, endpoints) = local_endpoints(2);
    let mut other = endpoints.clone();
    other.push("127.0.0.1:9".into());
    let l1 = listeners.pop().unwrap();
    let l0 = listeners.pop().unwrap();
    let options = TcpOptions {
        connect_timeout: Duration::from_secs(3),
        ..TcpOptions::default()
    };
    let a = {
        let endpoints = endpoints.clone();
        std::thread::spawn(move || TcpEndpoint::connect_with_listener(l0, &endpoints, 0, options))
    };
    let b = std::thread::spawn(move || TcpEndpoint::connect_with_listener(l1, &other, 1, options));
    let (a, b) = (a.join().unwrap(), b.join().unwrap());
    assert!(a.is_err() && b.is_err());
}

#[test]
fn dropped_tcp_peer_reads_as_disconnect() {
    let mut ring = tcp_ring(2);
    let peer = ring.pop().unwrap();
    drop(peer);
    let mut me = ring.pop().unwrap();
    assert!(matches!(me.recv_left(), Err(TransportError::Disconnected)));
}

#[test]
fn sim_latency_is_measured_back() {
    let tau = 300e-6;
    let eps = sim_ring(2, LatencyProfile::latency_only(tau).unwrap());
    let handles: Vec<_> = eps
        .into_iter()
        .map(|mut e| std::thread::spawn(move || measure_latency(&mut e, 32).unwrap()))
        .collect();
    let results: Vec<Option<f64>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let measured = results[0].expect("node 0 reports");
    assert!(results[1].is_none());
    assert!(measured >= tau && measured < 3.0 * tau, "measured {measured}");
}

#[test]
fn classic_substep_never_beats_latency() {
    let tau = 150e-6;
    let plan = DecompositionPlan::per_node(16, 2).unwrap();
    let kernel = schemes::build("ks", plan.total(), None).unwrap();
    let t = 200;
    let out = run_ring(
        Engine::Classic,
        kernel.as_ref(),
        &plan,
        t,
        sim_ring(2, LatencyProfile::latency_only(tau).unwrap()),
        &EngineOptions::default(),
    )
    .unwrap();
    let per_substep = out.wall_time().as_secs_f64() / t as f64;
    assert!(per_substep >= tau, "{per_substep}");
}
