//! Leading-edge payloads and swept geometry, checked against the serial
//! space-time history.

use swept_core::engines::{
    edge_merge, run_serial_history, DecompositionPlan, EngineOptions, Frontier, LeadingEdge,
    NodeState, Side,
};
use swept_core::schemes::{self, GodunovKernel, Stepping};
use swept_core::substep::Kernel;
use swept_core::transport::LoopbackTransport;

fn state<'k>(kernel: &'k dyn Kernel, n: usize, p: usize, node: usize) -> NodeState<'k> {
    let plan = DecompositionPlan::per_node(n, p).unwrap();
    NodeState::initialize(kernel, &plan, node, &EngineOptions::default())
}

fn serial_frame(history: &[swept_core::engines::Field], level: u64, i: i64) -> Vec<f64> {
    let f = &history[level as usize];
    let i = i.rem_euclid(f.points() as i64) as usize;
    f.point(i).to_vec()
}

#[test]
fn scalar_edge_payload() {
    let kernel = GodunovKernel::advection(4, Stepping::ForwardEuler);
    let mut s = state(&kernel, 4, 1, 0);
    s.build_triangle().unwrap();
    let left = s.edge_extract(Side::Left).unwrap();
    assert_eq!(left.levels(), 2);
    assert_eq!(left.scalar_count(), 4);
}

#[test]
fn euler_edge_payload_follows_arities() {
    let kernel = schemes::build("euler", 16, None).unwrap();
    let mut s = state(kernel.as_ref(), 8, 2, 1);
    s.build_triangle().unwrap();
    let right = s.edge_extract(Side::Right).unwrap();
    let sig = kernel.signature();
    let expected: usize = (0..4).map(|t| 2 * sig.input_arity(t)).sum();
    assert_eq!(right.scalar_count(), expected);
    assert_eq!(expected, 2 * (3 + 6 + 6 + 9));
    let back = LeadingEdge::decode(&right.encode()).unwrap();
    assert_eq!(back, right);
}

#[test]
fn triangle_edges_are_the_serial_boundary() {
    let n = 16;
    let p = 3;
    let kernel = schemes::build("ks", n * p, None).unwrap();
    let history = run_serial_history(kernel.as_ref(), n * p, n as u64, 1).unwrap();
    for node in 0..p {
        let mut s = state(kernel.as_ref(), n, p, node);
        s.build_triangle().unwrap();
        let left = s.edge_extract(Side::Left).unwrap();
        let right = s.edge_extract(Side::Right).unwrap();
        let start = (node * n) as i64;
        for j in 0..n / 2 {
            let t = j as u64;
            let w = n as i64 - 2 * j as i64;
            let at = |i: i64| serial_frame(&history, t, start + j as i64 + i);
            assert_eq!(left.frame(j, 0), at(0).as_slice());
            assert_eq!(left.frame(j, 1), at(1).as_slice());
            assert_eq!(right.frame(j, 0), at(w - 2).as_slice());
            assert_eq!(right.frame(j, 1), at(w - 1).as_slice());
        }
        // both edges meet at the two-point top
        assert_eq!(left.pair(n / 2 - 1), right.pair(n / 2 - 1));
    }
}

#[test]
fn extracting_keeps_the_other_edge() {
    let kernel = GodunovKernel::advection(8, Stepping::Midpoint);
    let mut s = state(&kernel, 8, 1, 0);
    s.build_triangle().unwrap();
    let before = match s.frontier() {
        Frontier::Triangle { right, .. } => right.clone().unwrap(),
        other => panic!("expected a triangle, got {other:?}"),
    };
    s.edge_extract(Side::Left).unwrap();
    match s.frontier() {
        Frontier::Triangle { left, right, .. } => {
            assert!(left.is_none());
            assert_eq!(right.as_ref(), Some(&before));
        }
        other => panic!("expected a triangle, got {other:?}"),
    }
    assert!(s.edge_extract(Side::Left).is_err());
}

#[test]
fn self_merge_is_the_triangle_boundary() {
    let kernel = GodunovKernel::advection(8, Stepping::ForwardEuler);
    let mut s = state(&kernel, 8, 1, 0);
    s.build_triangle().unwrap();
    let (l, r) = match s.frontier() {
        Frontier::Triangle { left, right, .. } => (left.clone().unwrap(), right.clone().unwrap()),
        _ => unreachable!(),
    };
    let v = edge_merge(r.clone(), l.clone()).unwrap();
    assert_eq!(v.left, r);
    assert_eq!(v.right, l);
    assert_eq!(v.levels(), 4);
    assert!((0..4).all(|j| v.known_frames(j) == 4));
    assert_eq!(v.known_frames(4), 0);
}

/// Drives one self-ring node by hand through a diamond and checks each
/// frontier against the serial history.
#[test]
fn diamond_and_flatten_match_serial() {
    let n = 12;
    let h = n / 2;
    let kernel = schemes::build("advection-rk2", n, None).unwrap();
    let history = run_serial_history(kernel.as_ref(), n, (3 * h) as u64, 1).unwrap();
    let mut s = state(kernel.as_ref(), n, 1, 0);
    let mut t = LoopbackTransport::new();

    s.build_triangle().unwrap();
    s.communicate(&mut t).unwrap();
    let center = match s.frontier() {
        Frontier::V { center, v } => {
            assert_eq!(v.base_level(), 0);
            *center
        }
        other => panic!("expected a V, got {other:?}"),
    };
    assert_eq!(center, n as i64);
    let before = s.kernel_applications();
    s.fill_diamond().unwrap();
    assert_eq!(s.kernel_applications() - before, (n * n / 2) as u64);
    assert_eq!(s.window_start(), h as i64);

    // the new triangle's edges are the serial boundary shifted by h
    let Frontier::Triangle { base, left, right } = s.frontier().clone() else {
        panic!("expected a triangle");
    };
    assert_eq!(base, h as u64);
    let (left, right) = (left.unwrap(), right.unwrap());
    for j in 0..h {
        let lvl = (h + j) as u64;
        let x = h as i64 + j as i64;
        assert_eq!(left.frame(j, 0), serial_frame(&history, lvl, x).as_slice());
        let xr = h as i64 + n as i64 - j as i64 - 1;
        assert_eq!(right.frame(j, 1), serial_frame(&history, lvl, xr).as_slice());
    }

    s.communicate(&mut t).unwrap();
    s.flatten().unwrap();
    let Frontier::Flat { level, values } = s.frontier() else {
        panic!("expected a flat window");
    };
    assert_eq!(*level, (2 * h) as u64);
    assert_eq!(s.window_start(), 0);
    assert_eq!(values, &history[2 * h].values);
}

#[test]
fn diamond_cell_count_matches_closed_form() {
    for n in [4, 8, 16, 64] {
        let kernel = GodunovKernel::advection(n, Stepping::ForwardEuler);
        let mut s = state(&kernel, n, 1, 0);
        let mut t = LoopbackTransport::new();
        s.build_triangle().unwrap();
        let triangle = s.kernel_applications();
        assert_eq!(triangle, ((n / 2) * (n / 2 - 1)) as u64);
        s.communicate(&mut t).unwrap();
        s.fill_diamond().unwrap();
        assert_eq!(s.kernel_applications() - triangle, (n * n / 2) as u64);
    }
}
