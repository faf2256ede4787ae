//! Swept space-time decomposition for one-dimensional explicit PDE solvers.
//!
//! A scheme is a [`substep::Kernel`]: a pure three-point update applied
//! through a fixed cycle of substeps. The [`engines`] run a kernel serially,
//! with classic per-substep halo exchange, or with the swept decomposition,
//! and all three produce bitwise-identical fields. [`transport`] provides the
//! ring networks the distributed engines talk over and [`perf_model`] the
//! latency/compute cost model.

pub mod engines;
pub mod perf_model;
pub mod schemes;
pub mod substep;
pub mod transport;
