use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use swept_core::engines::{run_ring, run_serial, DecompositionPlan, Engine, EngineOptions};
use swept_core::schemes::{self, CATALOG};
use swept_core::transport::{sim_ring, LatencyProfile};

use crate::error::BenchError;

/// One randomized equivalence case.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub scheme: &'static str,
    pub nodes: usize,
    pub points_per_node: usize,
    pub substeps: u64,
    pub flip: bool,
}

pub fn random_cases(seed: u64, count: usize) -> Vec<Case> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = 2 * rng.gen_range(2..=16);
            Case {
                scheme: CATALOG[rng.gen_range(0..CATALOG.len())],
                nodes: rng.gen_range(1..=4),
                points_per_node: n,
                substeps: rng.gen_range(0..=4 * n as u64),
                flip: rng.gen(),
            }
        })
        .collect()
}

/// Runs `count` random cases through all three engines and fails on the
/// first field that is not bitwise equal to the serial one.
pub fn verify_random(seed: u64, count: usize) -> Result<usize, BenchError> {
    for case in random_cases(seed, count) {
        let plan = DecompositionPlan::per_node(case.points_per_node, case.nodes)
            .map_err(|e| BenchError::Spec(e.to_string()))?;
        let kernel = schemes::build(case.scheme, plan.total(), None)
            .map_err(|e| BenchError::Spec(e.to_string()))?;
        let serial = run_serial(kernel.as_ref(), plan.total(), case.substeps)?;
        let options = EngineOptions {
            flip_orientation: case.flip,
            ..EngineOptions::default()
        };
        for engine in [Engine::Classic, Engine::Swept] {
            let out = run_ring(
                engine,
                kernel.as_ref(),
                &plan,
                case.substeps,
                sim_ring(case.nodes, LatencyProfile::zero()),
                &options,
            )?;
            if !out.field.bitwise_eq(&serial) {
                return Err(BenchError::Mismatch(format!("{engine} differs from serial on {case:?}")));
            }
        }
    }
    Ok(count)
}
