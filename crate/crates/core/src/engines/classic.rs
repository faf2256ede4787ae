use std::sync::Barrier;
use std::time::Instant;

use super::wire::{decode_halo, encode_halo};
use super::{DecompositionPlan, EngineError, EngineOptions, NodeOutput, NodeReport, Stepper};
use crate::substep::Kernel;
use crate::transport::RingTransport;

/// Advances a node's window `row` (points `start ..`, at `level`) by one
/// substep, exchanging one-point halos with both neighbours.
pub(crate) fn halo_step(
    stepper: &mut Stepper<'_>,
    transport: &mut dyn RingTransport,
    level: u64,
    start: i64,
    row: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) -> Result<(), EngineError> {
    let arity = stepper.kernel().signature().input_arity(level);
    let width = row.len() / arity;
    transport.send_left(encode_halo(level, &row[..arity]))?;
    transport.send_right(encode_halo(level, &row[(width - 1) * arity..]))?;

    scratch.clear();
    decode_halo(&transport.recv_left()?, level, arity, scratch)?;
    scratch.extend_from_slice(row);
    decode_halo(&transport.recv_right()?, level, arity, scratch)?;

    stepper.step_row(level, scratch, start - 1, row)
}

/// One node of a classic run. `barrier`, when given, lines all nodes up
/// before the clock starts.
pub fn classic_node(
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    node: usize,
    substeps: u64,
    transport: &mut dyn RingTransport,
    options: &EngineOptions,
    barrier: Option<&Barrier>,
) -> Result<NodeOutput, EngineError> {
    let mut stepper = Stepper::new(kernel, plan.total(), options.trace_cells);
    let start = plan.window_start(node) as i64;
    let mut row = Vec::new();
    let mut scratch = Vec::new();
    stepper.init_row(start, plan.points_per_node(), &mut row);

    if let Some(b) = barrier {
        b.wait();
    }
    let clock = Instant::now();
    for level in 0..substeps {
        halo_step(&mut stepper, transport, level, start, &mut row, &mut scratch)?;
    }
    let elapsed = clock.elapsed();

    Ok(NodeOutput {
        window_start: start as usize,
        level: substeps,
        arity: kernel.signature().input_arity(substeps),
        values: row,
        report: NodeReport {
            node,
            elapsed,
            kernel_applications: stepper.applications,
            transport: transport.stats(),
            swept_stages: 0,
            classic_substeps: substeps,
            fell_back: false,
            cells: stepper.cells.unwrap_or_default(),
        },
    })
}
