//! Swept space-time decomposition.
//!
//! With `h = n/2`, each node first computes the triangle standing on its
//! window: level `j` covers `n - 2j` points, up to two points at level
//! `h - 1`. The two outermost frames of every level on each side form the
//! left and right leading edges.
//!
//! A stage sends one edge to the neighbour on that side and receives the
//! neighbour's facing edge. The kept edge and the received one bound a V
//! centered on the boundary between the two windows. Filling the V widens
//! it by two points per level until it spans `n + 2` points at level
//! `base + h - 1`, after which the next triangle, shifted by `h` points,
//! stands on the resulting `n` frames at `base + h`. Each such diamond
//! costs `n²/2` kernel applications and advances the node by `h` levels.
//!
//! The last stage stops after the first row of the new triangle, leaving a
//! flat window. Levels not reachable in steps of `h` are finished with
//! classic halo exchange.

use std::mem;
use std::sync::Barrier;
use std::time::Instant;

use super::classic::halo_step;
use super::wire::{ProtocolError, Reader, Writer, EDGE_TAG};
use super::{DecompositionPlan, EngineError, EngineOptions, NodeOutput, NodeReport, Stepper};
use crate::substep::Kernel;
use crate::transport::RingTransport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    fn byte(self) -> u8 {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Side, ProtocolError> {
        match b {
            0 => Ok(Side::Left),
            1 => Ok(Side::Right),
            other => Err(ProtocolError::BadSide(other)),
        }
    }
}

/// The two outermost frames on one side of a triangle, for each of its
/// levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingEdge {
    side: Side,
    base_level: u64,
    arities: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl LeadingEdge {
    pub fn new(side: Side, base_level: u64) -> Self {
        Self {
            side,
            base_level,
            arities: Vec::new(),
            offsets: vec![0],
            values: Vec::new(),
        }
    }

    /// Appends the next level; `pair` is two frames of `arity` values,
    /// left to right.
    pub fn push_level(&mut self, arity: usize, pair: &[f64]) {
        assert_eq!(pair.len(), 2 * arity, "an edge level holds exactly two frames");
        self.arities.push(arity);
        self.values.extend_from_slice(pair);
        self.offsets.push(self.values.len());
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn base_level(&self) -> u64 {
        self.base_level
    }

    /// Number of levels spanned.
    pub fn levels(&self) -> usize {
        self.arities.len()
    }

    pub fn arity(&self, j: usize) -> usize {
        self.arities[j]
    }

    /// Both frames at level `base_level + j`.
    pub fn pair(&self, j: usize) -> &[f64] {
        &self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    /// Frame `k` (0 = left, 1 = right) at level `base_level + j`.
    pub fn frame(&self, j: usize, k: usize) -> &[f64] {
        let a = self.arities[j];
        &self.pair(j)[k * a..(k + 1) * a]
    }

    pub fn scalar_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(14 + 2 * self.levels() + 8 * self.values.len());
        w.u8(EDGE_TAG);
        w.u8(self.side.byte());
        w.u64(self.base_level);
        w.u32(self.levels() as u32);
        for &a in &self.arities {
            w.u16(a as u16);
        }
        w.f64s(&self.values);
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes);
        let tag = r.u8()?;
        if tag != EDGE_TAG {
            return Err(ProtocolError::BadTag(tag));
        }
        let side = Side::from_byte(r.u8()?)?;
        let base_level = r.u64()?;
        let levels = r.u32()? as usize;
        if levels > bytes.len() {
            return Err(ProtocolError::Truncated);
        }
        let mut arities = Vec::with_capacity(levels);
        let mut offsets = Vec::with_capacity(levels + 1);
        offsets.push(0);
        let mut total = 0usize;
        for _ in 0..levels {
            let a = r.u16()? as usize;
            arities.push(a);
            total += 2 * a;
            offsets.push(total);
        }
        let mut values = Vec::with_capacity(total.min(bytes.len() / 8));
        r.f64s_into(total, &mut values)?;
        r.finish()?;
        Ok(Self {
            side,
            base_level,
            arities,
            offsets,
            values,
        })
    }
}

/// A pair of leading edges facing each other across a window boundary.
///
/// At relative level `j` the known frames are the left part's pair at
/// `center - j - 2 ..` and the right part's pair at `center + j ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct VFrontier {
    /// A right edge of the window left of the boundary.
    pub left: LeadingEdge,
    /// A left edge of the window right of the boundary.
    pub right: LeadingEdge,
}

impl VFrontier {
    pub fn base_level(&self) -> u64 {
        self.left.base_level
    }

    pub fn levels(&self) -> usize {
        self.left.levels()
    }

    /// Frames known at relative level `j`.
    pub fn known_frames(&self, j: usize) -> usize {
        if j < self.levels() {
            4
        } else {
            0
        }
    }

    /// Cells a diamond computes from this V: the V's interior plus the
    /// triangle standing on it.
    pub fn diamond_cells(&self) -> usize {
        let h = self.levels();
        h * (h - 1) + h * (h + 1)
    }
}

/// Pairs the edge a node kept with the one it received.
pub fn edge_merge(kept: LeadingEdge, received: LeadingEdge) -> Result<VFrontier, ProtocolError> {
    if kept.side == received.side {
        return Err(ProtocolError::SameSide);
    }
    if kept.levels() != received.levels() {
        return Err(ProtocolError::SpanMismatch {
            kept: kept.levels(),
            received: received.levels(),
        });
    }
    if kept.base_level != received.base_level {
        return Err(ProtocolError::LevelMismatch {
            expected: kept.base_level,
            got: received.base_level,
        });
    }
    for j in 0..kept.levels() {
        if kept.arities[j] != received.arities[j] {
            return Err(ProtocolError::ArityMismatch {
                level: kept.base_level + j as u64,
                expected: kept.arities[j],
                got: received.arities[j],
            });
        }
    }
    let (left, right) = match kept.side {
        Side::Right => (kept, received),
        Side::Left => (received, kept),
    };
    Ok(VFrontier { left, right })
}

/// What a node knows between stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Frontier {
    /// Every point of the window at one level.
    Flat { level: u64, values: Vec<f64> },
    /// A computed triangle, reduced to whichever edges have not been sent.
    Triangle {
        base: u64,
        left: Option<LeadingEdge>,
        right: Option<LeadingEdge>,
    },
    /// A V centered at global position `center`.
    V { center: i64, v: VFrontier },
}

/// Stage plan for a swept run of `substeps` with half-width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweptSchedule {
    pub fell_back: bool,
    /// Communication stages; the last one flattens.
    pub stages: u64,
    /// Substeps finished by halo exchange.
    pub remainder: u64,
}

impl SweptSchedule {
    /// Messages each node sends.
    pub fn sends(&self) -> u64 {
        self.stages + 2 * self.remainder
    }
}

pub fn swept_schedule(half: usize, substeps: u64) -> SweptSchedule {
    let h = half as u64;
    if substeps < h {
        return SweptSchedule {
            fell_back: true,
            stages: 0,
            remainder: substeps,
        };
    }
    SweptSchedule {
        fell_back: false,
        stages: substeps / h,
        remainder: substeps % h,
    }
}

/// One node's swept state machine.
pub struct NodeState<'k> {
    node: usize,
    n: usize,
    window_start: i64,
    frontier: Frontier,
    stage: u64,
    flip: bool,
    stepper: Stepper<'k>,
    row: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'k> NodeState<'k> {
    /// A flat level-0 window for `node`.
    pub fn initialize(
        kernel: &'k dyn Kernel,
        plan: &DecompositionPlan,
        node: usize,
        options: &EngineOptions,
    ) -> Self {
        let stepper = Stepper::new(kernel, plan.total(), options.trace_cells);
        let window_start = plan.window_start(node) as i64;
        let mut values = Vec::new();
        stepper.init_row(window_start, plan.points_per_node(), &mut values);
        Self {
            node,
            n: plan.points_per_node(),
            window_start,
            frontier: Frontier::Flat { level: 0, values },
            stage: 0,
            flip: options.flip_orientation,
            stepper,
            row: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    /// Global position of the window's first point; may be negative or past
    /// the end of the grid.
    pub fn window_start(&self) -> i64 {
        self.window_start
    }

    pub fn frontier(&self) -> &Frontier {
        &self.frontier
    }

    /// Completed communication stages.
    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn kernel_applications(&self) -> u64 {
        self.stepper.applications
    }

    fn half(&self) -> usize {
        self.n / 2
    }

    /// The side whose edge the next stage sends.
    pub fn send_side(&self) -> Side {
        let first = if self.flip { Side::Right } else { Side::Left };
        if self.stage.is_multiple_of(2) {
            first
        } else {
            first.opposite()
        }
    }

    /// Computes the triangle standing on a flat window.
    pub fn build_triangle(&mut self) -> Result<(), EngineError> {
        let (level, values) = match mem::replace(&mut self.frontier, placeholder()) {
            Frontier::Flat { level, values } => (level, values),
            other => {
                self.frontier = other;
                return Err(EngineError::State("triangle needs a flat window"));
            }
        };
        self.row = values;
        self.triangle_from_row(level)
    }

    /// `self.row` holds the window's `n` frames at `base`.
    fn triangle_from_row(&mut self, base: u64) -> Result<(), EngineError> {
        let h = self.half();
        let sig = self.stepper.kernel().signature();
        let mut left = LeadingEdge::new(Side::Left, base);
        let mut right = LeadingEdge::new(Side::Right, base);
        let mut row = mem::take(&mut self.row);
        let mut next = mem::take(&mut self.scratch);
        for j in 0..h {
            let level = base + j as u64;
            let a = sig.input_arity(level);
            let w = row.len() / a;
            left.push_level(a, &row[..2 * a]);
            right.push_level(a, &row[(w - 2) * a..]);
            if j + 1 < h {
                self.stepper
                    .step_row(level, &row, self.window_start + j as i64, &mut next)?;
                mem::swap(&mut row, &mut next);
            }
        }
        self.row = row;
        self.scratch = next;
        self.frontier = Frontier::Triangle {
            base,
            left: Some(left),
            right: Some(right),
        };
        Ok(())
    }

    /// Removes the `side` edge from the triangle, keeping the other.
    pub fn edge_extract(&mut self, side: Side) -> Result<LeadingEdge, EngineError> {
        let Frontier::Triangle { left, right, .. } = &mut self.frontier else {
            return Err(EngineError::State("no triangle to take an edge from"));
        };
        let slot = match side {
            Side::Left => left,
            Side::Right => right,
        };
        slot.take()
            .ok_or(EngineError::State("edge already extracted"))
    }

    /// Forms the V from the kept edge and a neighbour's edge.
    pub fn merge(&mut self, received: LeadingEdge) -> Result<(), EngineError> {
        let Frontier::Triangle { base, left, right } = &mut self.frontier else {
            return Err(EngineError::State("merge needs a triangle"));
        };
        let base = *base;
        let kept = match (left.take(), right.take()) {
            (Some(k), None) | (None, Some(k)) => k,
            _ => return Err(EngineError::State("merge needs exactly one kept edge")),
        };
        if received.base_level() != base {
            return Err(ProtocolError::LevelMismatch {
                expected: base,
                got: received.base_level(),
            }
            .into());
        }
        let center = match kept.side() {
            Side::Right => self.window_start + self.n as i64,
            Side::Left => self.window_start,
        };
        let v = edge_merge(kept, received)?;
        self.frontier = Frontier::V { center, v };
        self.stage += 1;
        Ok(())
    }

    /// Fills the V up to its widest row: `n + 2` frames at `base + h - 1`
    /// starting at `center - h - 1`, left in `self.row`.
    fn fill_v(&mut self) -> Result<(i64, u64), EngineError> {
        let Frontier::V { center, v } = mem::replace(&mut self.frontier, placeholder()) else {
            return Err(EngineError::State("fill needs a V"));
        };
        let base = v.base_level();
        let h = v.levels();
        let mut row = mem::take(&mut self.row);
        let mut interior = mem::take(&mut self.scratch);
        row.clear();
        row.extend_from_slice(v.left.pair(0));
        row.extend_from_slice(v.right.pair(0));
        for j in 1..h {
            let below = base + j as u64 - 1;
            let first = center - j as i64 - 1;
            self.stepper.step_row(below, &row, first, &mut interior)?;
            row.clear();
            row.extend_from_slice(v.left.pair(j));
            row.extend_from_slice(&interior);
            row.extend_from_slice(v.right.pair(j));
        }
        self.row = row;
        self.scratch = interior;
        Ok((center, base + h as u64 - 1))
    }

    /// Completes the diamond over the V; the window moves to the V's center.
    pub fn fill_diamond(&mut self) -> Result<(), EngineError> {
        let (_, top) = self.step_past_v()?;
        self.triangle_from_row(top)
    }

    /// Completes the V into a flat window at the level just above it.
    pub fn flatten(&mut self) -> Result<(), EngineError> {
        let (_, level) = self.step_past_v()?;
        self.frontier = Frontier::Flat {
            level,
            values: mem::take(&mut self.row),
        };
        Ok(())
    }

    /// Fills the V and computes one more row: the new window's `n` frames.
    fn step_past_v(&mut self) -> Result<(i64, u64), EngineError> {
        let (center, widest) = self.fill_v()?;
        let h = self.half() as i64;
        self.stepper
            .step_row(widest, &self.row, center - h - 1, &mut self.scratch)?;
        mem::swap(&mut self.row, &mut self.scratch);
        self.window_start = center - h;
        Ok((center, widest + 1))
    }

    /// One substep of halo exchange on a flat window.
    pub fn classic_step(&mut self, transport: &mut dyn RingTransport) -> Result<(), EngineError> {
        let Frontier::Flat { level, values } = &mut self.frontier else {
            return Err(EngineError::State("halo step needs a flat window"));
        };
        halo_step(
            &mut self.stepper,
            transport,
            *level,
            self.window_start,
            values,
            &mut self.scratch,
        )?;
        *level += 1;
        Ok(())
    }

    /// Sends one edge, receives the facing one and merges them.
    pub fn communicate(&mut self, transport: &mut dyn RingTransport) -> Result<(), EngineError> {
        let side = self.send_side();
        let edge = self.edge_extract(side)?;
        let bytes = match side {
            Side::Left => {
                transport.send_left(edge.encode())?;
                transport.recv_right()?
            }
            Side::Right => {
                transport.send_right(edge.encode())?;
                transport.recv_left()?
            }
        };
        self.merge(LeadingEdge::decode(&bytes)?)
    }

    fn finish(self, report: NodeReport, total: usize) -> Result<NodeOutput, EngineError> {
        let Frontier::Flat { level, values } = self.frontier else {
            return Err(EngineError::State("run ended without a flat window"));
        };
        Ok(NodeOutput {
            window_start: self.window_start.rem_euclid(total as i64) as usize,
            level,
            arity: self.stepper.kernel().signature().input_arity(level),
            values,
            report: NodeReport {
                kernel_applications: self.stepper.applications,
                cells: self.stepper.cells.unwrap_or_default(),
                ..report
            },
        })
    }
}

fn placeholder() -> Frontier {
    Frontier::Flat {
        level: 0,
        values: Vec::new(),
    }
}

/// One node of a swept run. `barrier`, when given, lines all nodes up
/// before the clock starts.
pub fn swept_node(
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    node: usize,
    substeps: u64,
    transport: &mut dyn RingTransport,
    options: &EngineOptions,
    barrier: Option<&Barrier>,
) -> Result<NodeOutput, EngineError> {
    let schedule = swept_schedule(plan.half(), substeps);
    let mut state = NodeState::initialize(kernel, plan, node, options);
    if schedule.fell_back {
        log::debug!(
            "node {node}: {substeps} substeps is shorter than n/2 = {}, using halo exchange",
            plan.half()
        );
    }

    if let Some(b) = barrier {
        b.wait();
    }
    let clock = Instant::now();
    if schedule.stages > 0 {
        state.build_triangle()?;
        for stage in 1..=schedule.stages {
            state.communicate(transport)?;
            if stage < schedule.stages {
                state.fill_diamond()?;
            } else {
                state.flatten()?;
            }
        }
    }
    for _ in 0..schedule.remainder {
        state.classic_step(transport)?;
    }
    let elapsed = clock.elapsed();

    let report = NodeReport {
        node,
        elapsed,
        transport: transport.stats(),
        swept_stages: schedule.stages,
        classic_substeps: schedule.remainder,
        fell_back: schedule.fell_back,
        ..NodeReport::default()
    };
    state.finish(report, plan.total())
}
