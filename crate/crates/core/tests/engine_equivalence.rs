use std::collections::HashMap;

use proptest::prelude::*;
use swept_core::engines::{
    run_ring, run_serial, swept_schedule, DecompositionPlan, Engine, EngineOptions, Field,
    RunOutcome,
};
use swept_core::schemes::{self, CATALOG};
use swept_core::substep::Kernel;
use swept_core::transport::{sim_ring, LatencyProfile, LoopbackTransport, RingTransport};

fn transports(p: usize) -> Vec<Box<dyn RingTransport>> {
    if p == 1 {
        vec![Box::new(LoopbackTransport::new())]
    } else {
        sim_ring(p, LatencyProfile::zero())
            .into_iter()
            .map(|t| Box::new(t) as Box<dyn RingTransport>)
            .collect()
    }
}

fn run(
    engine: Engine,
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    t: u64,
    options: &EngineOptions,
) -> RunOutcome {
    run_ring(engine, kernel, plan, t, transports(plan.nodes()), options)
        .unwrap_or_else(|e| panic!("{engine} failed: {e}"))
}

fn first_difference(a: &Field, b: &Field) -> Option<usize> {
    a.values
        .iter()
        .zip(&b.values)
        .position(|(x, y)| x.to_bits() != y.to_bits())
}

fn assert_equivalent(scheme: &str, p: usize, n: usize, t: u64, options: &EngineOptions) {
    let plan = DecompositionPlan::per_node(n, p).unwrap();
    let kernel = schemes::build(scheme, plan.total(), None).unwrap();
    let serial = run_serial(kernel.as_ref(), plan.total(), t).unwrap();
    for engine in [Engine::Classic, Engine::Swept] {
        let out = run(engine, kernel.as_ref(), &plan, t, options);
        assert!(
            out.field.bitwise_eq(&serial),
            "{scheme} {engine} p={p} n={n} T={t}: level {} vs {}, first differing scalar {:?}",
            out.field.level,
            serial.level,
            first_difference(&out.field, &serial)
        );
    }
}

#[test]
fn all_schemes_small_plans() {
    for &scheme in CATALOG {
        for p in [1, 2, 4] {
            for n in [4, 8, 16] {
                let h = n as u64 / 2;
                for t in [0, 1, h - 1, h, h + 1, n as u64, 3 * n as u64 + 1] {
                    assert_equivalent(scheme, p, n, t, &EngineOptions::default());
                }
            }
        }
    }
}

#[test]
fn flipped_orientation_is_equivalent() {
    let options = EngineOptions {
        flip_orientation: true,
        ..EngineOptions::default()
    };
    for &scheme in CATALOG {
        for p in [1, 3] {
            assert_equivalent(scheme, p, 8, 29, &options);
        }
    }
}

#[test]
fn self_ring_ks_three_n() {
    let n = 64;
    assert_equivalent("ks", 1, n, 3 * n as u64, &EngineOptions::default());
}

#[test]
fn euler_sod_four_nodes() {
    assert_equivalent("euler", 4, 16, 100, &EngineOptions::default());
    assert_equivalent("euler", 4, 16, 160, &EngineOptions::default());
}

#[test]
fn repeated_runs_are_identical() {
    let plan = DecompositionPlan::per_node(12, 3).unwrap();
    let kernel = schemes::build("ks", plan.total(), None).unwrap();
    let a = run(Engine::Swept, kernel.as_ref(), &plan, 50, &EngineOptions::default());
    let b = run(Engine::Swept, kernel.as_ref(), &plan, 50, &EngineOptions::default());
    assert!(a.field.bitwise_eq(&b.field));
}

/// Every space-time cell above level 0 is computed by exactly one node,
/// exactly once.
#[test]
fn every_cell_computed_once() {
    let traced = EngineOptions {
        trace_cells: true,
        ..EngineOptions::default()
    };
    for (p, n, t) in [(1, 4, 13), (2, 8, 4), (3, 8, 27), (4, 16, 100), (2, 6, 2)] {
        let plan = DecompositionPlan::per_node(n, p).unwrap();
        let kernel = schemes::build("gradient-chain", plan.total(), None).unwrap();
        for engine in [Engine::Classic, Engine::Swept] {
            let out = run(engine, kernel.as_ref(), &plan, t, &traced);
            let mut seen: HashMap<(usize, u64), usize> = HashMap::new();
            for r in &out.reports {
                assert_eq!(r.cells.len() as u64, r.kernel_applications);
                for &c in &r.cells {
                    *seen.entry(c).or_default() += 1;
                }
            }
            assert_eq!(seen.len(), plan.total() * t as usize, "{engine} p={p} n={n}");
            assert!(seen.values().all(|&k| k == 1));
            assert!(seen
                .keys()
                .all(|&(i, l)| i < plan.total() && (1..=t).contains(&l)));
        }
    }
}

#[test]
fn work_is_balanced_across_nodes() {
    let plan = DecompositionPlan::per_node(16, 4).unwrap();
    let kernel = schemes::build("advection", plan.total(), None).unwrap();
    let t = 8 * 10;
    let out = run(Engine::Swept, kernel.as_ref(), &plan, t, &EngineOptions::default());
    for r in &out.reports {
        assert_eq!(r.kernel_applications, 16 * t);
        assert_eq!(r.swept_stages, 10);
        assert_eq!(r.classic_substeps, 0);
    }
}

#[test]
fn message_counts() {
    for (n, t) in [(8, 3), (8, 4), (8, 40), (8, 43), (16, 100)] {
        let plan = DecompositionPlan::per_node(n, 2).unwrap();
        let kernel = schemes::build("gradient-chain", plan.total(), None).unwrap();
        let swept = run(Engine::Swept, kernel.as_ref(), &plan, t, &EngineOptions::default());
        let classic = run(Engine::Classic, kernel.as_ref(), &plan, t, &EngineOptions::default());
        let expected = swept_schedule(n / 2, t).sends();
        for r in &swept.reports {
            assert_eq!(r.transport.messages_sent, expected, "n={n} T={t}");
            assert_eq!(r.transport.messages_received, expected);
        }
        for r in &classic.reports {
            assert_eq!(r.transport.messages_sent, 2 * t);
        }
    }
}

#[test]
fn short_runs_fall_back() {
    let plan = DecompositionPlan::per_node(16, 2).unwrap();
    let kernel = schemes::build("advection", plan.total(), None).unwrap();
    let out = run(Engine::Swept, kernel.as_ref(), &plan, 7, &EngineOptions::default());
    assert!(out.reports.iter().all(|r| r.fell_back && r.swept_stages == 0));
    let out = run(Engine::Swept, kernel.as_ref(), &plan, 8, &EngineOptions::default());
    assert!(out.reports.iter().all(|r| !r.fell_back));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_plans_agree(
        scheme in prop::sample::select(CATALOG.to_vec()),
        p in 1usize..5,
        half in 2usize..9,
        t in 0u64..60,
        flip in any::<bool>(),
    ) {
        let options = EngineOptions { flip_orientation: flip, ..EngineOptions::default() };
        assert_equivalent(scheme, p, 2 * half, t, &options);
    }
}
