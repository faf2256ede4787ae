//! Execution engines.
//!
//! All three engines call the same kernel with the same operands for every
//! space-time cell, so for a given kernel, grid and substep count they
//! produce bitwise-identical fields:
//!
//! * [`run_serial`] steps the whole periodic grid in one thread.
//! * [`run_classic`] splits space among ring nodes and exchanges one-point
//!   halos with both neighbours every substep.
//! * [`run_swept`] splits space and time: nodes compute triangles and
//!   diamonds of the space-time grid and exchange a leading edge once per
//!   `n/2` substeps.

mod classic;
mod serial;
mod swept;
pub(crate) mod wire;

use std::fmt;
use std::str::FromStr;
use std::sync::Barrier;
use std::time::Duration;

use thiserror::Error;

use crate::substep::{step_point, Kernel, KernelError, StencilView};
use crate::transport::{RingTransport, TransportError, TransportStats};

pub use classic::classic_node;
pub use serial::{run_serial, run_serial_history, run_serial_timed};
pub use swept::{
    edge_merge, swept_node, swept_schedule, Frontier, LeadingEdge, NodeState, Side, SweptSchedule,
    VFrontier,
};
pub use wire::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("need at least one node")]
    NoNodes,
    #[error("{nodes} nodes do not divide {total} points")]
    Indivisible { total: usize, nodes: usize },
    #[error("points per node must be even, got {0}")]
    OddPoints(usize),
    #[error("points per node must be at least 4, got {0}")]
    TooFewPoints(usize),
}

/// `N` points on a periodic ring split evenly among `p` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionPlan {
    total: usize,
    nodes: usize,
}

impl DecompositionPlan {
    pub fn new(total: usize, nodes: usize) -> Result<Self, PlanError> {
        if nodes == 0 {
            return Err(PlanError::NoNodes);
        }
        if !total.is_multiple_of(nodes) {
            return Err(PlanError::Indivisible { total, nodes });
        }
        let n = total / nodes;
        if !n.is_multiple_of(2) {
            return Err(PlanError::OddPoints(n));
        }
        if n < 4 {
            return Err(PlanError::TooFewPoints(n));
        }
        Ok(Self { total, nodes })
    }

    pub fn per_node(points_per_node: usize, nodes: usize) -> Result<Self, PlanError> {
        Self::new(points_per_node * nodes, nodes)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Points per node, `n`.
    pub fn points_per_node(&self) -> usize {
        self.total / self.nodes
    }

    /// `n / 2`, the number of levels a leading edge spans.
    pub fn half(&self) -> usize {
        self.points_per_node() / 2
    }

    /// First global point of `node`'s initial window.
    pub fn window_start(&self, node: usize) -> usize {
        node * self.points_per_node()
    }
}

/// All points of the grid at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub level: u64,
    pub arity: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn points(&self) -> usize {
        self.values.len() / self.arity
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.arity..(i + 1) * self.arity]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.arity).copied().collect()
    }

    /// True when both fields hold the same bits at the same level.
    pub fn bitwise_eq(&self, other: &Field) -> bool {
        self.level == other.level
            && self.arity == other.arity
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("numerical blow-up: {0}")]
    Kernel(#[from] KernelError),
    #[error("transport failure: {0}")]
    Transport(#[from] TransportError),
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("invalid plan: {0}")]
    Plan(#[from] PlanError),
    #[error("expected {expected} transports, got {got}")]
    TransportCount { expected: usize, got: usize },
    #[error("node {0} worker panicked")]
    WorkerPanicked(usize),
    #[error("engine state error: {0}")]
    State(&'static str),
}

impl EngineError {
    /// Blow-ups surface through every node of a ring as disconnects; this
    /// ranks the root cause first.
    fn severity(&self) -> u8 {
        match self {
            EngineError::Kernel(_) => 0,
            EngineError::Protocol(_) | EngineError::State(_) => 1,
            EngineError::WorkerPanicked(_) => 2,
            EngineError::Transport(TransportError::Disconnected) => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Serial,
    Classic,
    Swept,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Serial, Engine::Classic, Engine::Swept];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Serial => "serial",
            Engine::Classic => "classic",
            Engine::Swept => "swept",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown engine `{0}` (available: serial, classic, swept)")]
pub struct UnknownEngine(pub String);

impl FromStr for Engine {
    type Err = UnknownEngine;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "serial" => Ok(Engine::Serial),
            "classic" | "straight" => Ok(Engine::Classic),
            "swept" => Ok(Engine::Swept),
            other => Err(UnknownEngine(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineOptions {
    /// Swept only: the first communication goes right instead of left.
    pub flip_orientation: bool,
    /// Record every computed `(point, level)` cell in the node report.
    pub trace_cells: bool,
}

/// Per-node accounting of one run.
#[derive(Debug, Clone, Default)]
pub struct NodeReport {
    pub node: usize,
    /// Wall time of the stepping loop only.
    pub elapsed: Duration,
    pub kernel_applications: u64,
    pub transport: TransportStats,
    /// Swept communication stages executed.
    pub swept_stages: u64,
    /// Substeps done by classic halo stepping.
    pub classic_substeps: u64,
    /// Swept only: the run was too short for the swept schedule.
    pub fell_back: bool,
    /// Computed cells as `(point, level of the output)`, when traced.
    pub cells: Vec<(usize, u64)>,
}

/// One node's share of the final field.
#[derive(Debug, Clone)]
pub struct NodeOutput {
    /// Global index of the first point in `values`.
    pub window_start: usize,
    pub level: u64,
    pub arity: usize,
    pub values: Vec<f64>,
    pub report: NodeReport,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub field: Field,
    pub reports: Vec<NodeReport>,
}

impl RunOutcome {
    /// Slowest node's stepping time.
    pub fn wall_time(&self) -> Duration {
        self.reports
            .iter()
            .map(|r| r.elapsed)
            .max()
            .unwrap_or_default()
    }
}

/// Runs `substeps` sub-timesteps with classic halo exchange, one worker
/// thread per transport.
pub fn run_classic<T: RingTransport>(
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    substeps: u64,
    transports: Vec<T>,
    options: &EngineOptions,
) -> Result<RunOutcome, EngineError> {
    run_ring(Engine::Classic, kernel, plan, substeps, transports, options)
}

/// Runs `substeps` sub-timesteps with the swept decomposition, one worker
/// thread per transport.
pub fn run_swept<T: RingTransport>(
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    substeps: u64,
    transports: Vec<T>,
    options: &EngineOptions,
) -> Result<RunOutcome, EngineError> {
    run_ring(Engine::Swept, kernel, plan, substeps, transports, options)
}

/// Runs a distributed engine over in-process workers. `Engine::Serial`
/// ignores the transports.
pub fn run_ring<T: RingTransport>(
    engine: Engine,
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    substeps: u64,
    transports: Vec<T>,
    options: &EngineOptions,
) -> Result<RunOutcome, EngineError> {
    if engine == Engine::Serial {
        let (field, elapsed) = run_serial_timed(kernel, plan.total(), substeps)?;
        let report = NodeReport {
            elapsed,
            kernel_applications: substeps * plan.total() as u64,
            ..NodeReport::default()
        };
        return Ok(RunOutcome {
            field,
            reports: vec![report],
        });
    }
    if transports.len() != plan.nodes() {
        return Err(EngineError::TransportCount {
            expected: plan.nodes(),
            got: transports.len(),
        });
    }
    let barrier = Barrier::new(plan.nodes());
    let results: Vec<Result<NodeOutput, EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = transports
            .into_iter()
            .enumerate()
            .map(|(node, mut transport)| {
                let barrier = &barrier;
                scope.spawn(move || match engine {
                    Engine::Classic => classic_node(
                        kernel,
                        plan,
                        node,
                        substeps,
                        &mut transport,
                        options,
                        Some(barrier),
                    ),
                    _ => swept_node(
                        kernel,
                        plan,
                        node,
                        substeps,
                        &mut transport,
                        options,
                        Some(barrier),
                    ),
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(node, h)| h.join().unwrap_or(Err(EngineError::WorkerPanicked(node))))
            .collect()
    });

    let mut outputs = Vec::with_capacity(results.len());
    let mut first_error: Option<EngineError> = None;
    for r in results {
        match r {
            Ok(out) => outputs.push(out),
            Err(e) => {
                if first_error
                    .as_ref()
                    .is_none_or(|f| e.severity() < f.severity())
                {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    gather(plan, outputs)
}

/// Assembles node windows into one field.
pub fn gather(plan: &DecompositionPlan, outputs: Vec<NodeOutput>) -> Result<RunOutcome, EngineError> {
    let first = outputs.first().ok_or(EngineError::State("no node output"))?;
    let (level, arity) = (first.level, first.arity);
    let total = plan.total();
    let mut values = vec![f64::NAN; total * arity];
    let mut reports = Vec::with_capacity(outputs.len());
    for out in outputs {
        if out.level != level || out.arity != arity {
            return Err(EngineError::State("nodes finished at different levels"));
        }
        for (j, frame) in out.values.chunks_exact(arity).enumerate() {
            let i = (out.window_start + j) % total;
            values[i * arity..(i + 1) * arity].copy_from_slice(frame);
        }
        reports.push(out.report);
    }
    reports.sort_by_key(|r| r.node);
    Ok(RunOutcome {
        field: Field {
            level,
            arity,
            values,
        },
        reports,
    })
}

/// Applies the kernel across rows of the space-time grid.
pub(crate) struct Stepper<'k> {
    kernel: &'k dyn Kernel,
    total: usize,
    dx: f64,
    dt: f64,
    pub(crate) applications: u64,
    pub(crate) cells: Option<Vec<(usize, u64)>>,
}

impl<'k> Stepper<'k> {
    pub(crate) fn new(kernel: &'k dyn Kernel, total: usize, trace: bool) -> Self {
        Self {
            kernel,
            total,
            dx: kernel.dx(),
            dt: kernel.dt(),
            applications: 0,
            cells: trace.then(Vec::new),
        }
    }

    pub(crate) fn kernel(&self) -> &'k dyn Kernel {
        self.kernel
    }

    pub(crate) fn wrap(&self, position: i64) -> usize {
        position.rem_euclid(self.total as i64) as usize
    }

    /// Fills `out` with the level-0 frames of points `start .. start + count`.
    pub(crate) fn init_row(&self, start: i64, count: usize, out: &mut Vec<f64>) {
        let arity = self.kernel.signature().input_arity(0);
        out.clear();
        out.resize(count * arity, 0.0);
        for (j, frame) in out.chunks_exact_mut(arity).enumerate() {
            let i = self.wrap(start + j as i64);
            self.kernel.init(i, i as f64 * self.dx, frame);
        }
    }

    /// Advances the interior of `row` by one substep.
    ///
    /// `row` holds `w` frames at `level` for points `first .. first + w`;
    /// `out` receives the `w - 2` frames at `level + 1` for
    /// `first + 1 .. first + w - 1`.
    pub(crate) fn step_row(
        &mut self,
        level: u64,
        row: &[f64],
        first: i64,
        out: &mut Vec<f64>,
    ) -> Result<(), EngineError> {
        let sig = self.kernel.signature();
        let a_in = sig.input_arity(level);
        let a_out = sig.output_arity(level);
        let width = row.len() / a_in;
        debug_assert_eq!(row.len(), width * a_in);
        debug_assert!(width >= 3);
        out.clear();
        out.resize((width - 2) * a_out, 0.0);
        for (j, dst) in out.chunks_exact_mut(a_out).enumerate() {
            let view = StencilView {
                left: &row[j * a_in..(j + 1) * a_in],
                center: &row[(j + 1) * a_in..(j + 2) * a_in],
                right: &row[(j + 2) * a_in..(j + 3) * a_in],
                dx: self.dx,
                dt: self.dt,
            };
            if let Err(e) = step_point(self.kernel, level, &view, dst) {
                return Err(e.at_point(self.wrap(first + 1 + j as i64)).into());
            }
        }
        self.applications += (width - 2) as u64;
        let total = self.total as i64;
        if let Some(cells) = &mut self.cells {
            for j in 0..width - 2 {
                let i = (first + 1 + j as i64).rem_euclid(total) as usize;
                cells.push((i, level + 1));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_invariants() {
        assert!(DecompositionPlan::new(64, 4).is_ok());
        assert_eq!(DecompositionPlan::new(64, 0), Err(PlanError::NoNodes));
        assert_eq!(
            DecompositionPlan::new(63, 4),
            Err(PlanError::Indivisible { total: 63, nodes: 4 })
        );
        assert_eq!(DecompositionPlan::new(60, 4), Err(PlanError::OddPoints(15)));
        assert_eq!(DecompositionPlan::new(8, 4), Err(PlanError::TooFewPoints(2)));
        let plan = DecompositionPlan::per_node(16, 3).unwrap();
        assert_eq!((plan.total(), plan.half(), plan.window_start(2)), (48, 8, 32));
    }

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.name().parse::<Engine>().unwrap(), e);
        }
        assert!("diamond".parse::<Engine>().is_err());
    }
}
