//! Analytical cost model for swept and classic decompositions.
//!
//! A swept node advancing `n` points spends `n·s` seconds computing and
//! `2τ/n` seconds waiting on the network per substep. Minimizing over `n`
//! gives `n* = √(2τ/s)` and `t* = √(8τs)`, which beats the latency floor
//! `τ` of per-substep exchange by `√(τ/8s)`.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PerfParamsError {
    #[error("latency must be positive and finite, got {0}")]
    Tau(f64),
    #[error("seconds per step-point must be positive and finite, got {0}")]
    S(f64),
    #[error("flops per step-point and node flop rate must be positive, got {f} and {rate}")]
    Flops { f: f64, rate: f64 },
}

/// Network latency `tau` and compute cost `s`, both in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfParams {
    tau: f64,
    s: f64,
}

impl PerfParams {
    pub fn new(tau: f64, s: f64) -> Result<Self, PerfParamsError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(PerfParamsError::Tau(tau));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(PerfParamsError::S(s));
        }
        Ok(Self { tau, s })
    }

    /// `s = f / rate` for `f` flops per step-point on a node doing `rate`
    /// flops per second.
    pub fn from_flops(tau: f64, f: f64, rate: f64) -> Result<Self, PerfParamsError> {
        if !(f.is_finite() && f > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(PerfParamsError::Flops { f, rate });
        }
        Self::new(tau, f / rate)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPrediction {
    pub n_star: f64,
    pub t_star: f64,
    pub break_factor: f64,
    pub barrier_broken: bool,
    /// Integer `n >= 1` minimizing [`time_per_substep`].
    pub best_n: u64,
}

/// Swept cost per substep: `n·s + 2τ/n`.
pub fn time_per_substep(params: &PerfParams, n: u64) -> f64 {
    let n = n as f64;
    n * params.s + 2.0 * params.tau / n
}

/// Per-substep exchange cost: `n·s + τ`.
pub fn classic_time_per_substep(params: &PerfParams, n: u64) -> f64 {
    n as f64 * params.s + params.tau
}

pub fn optimize(params: &PerfParams) -> ModelPrediction {
    let (tau, s) = (params.tau, params.s);
    let n_star = (2.0 * tau / s).sqrt();
    ModelPrediction {
        n_star,
        t_star: (8.0 * tau * s).sqrt(),
        break_factor: (tau / (8.0 * s)).sqrt(),
        barrier_broken: tau > 8.0 * s,
        best_n: best_integer_n(params, n_star),
    }
}

/// The cost is convex in `n`, so the integer optimum is one of the two
/// integers around `n*`. Ties go to the smaller `n`.
fn best_integer_n(params: &PerfParams, n_star: f64) -> u64 {
    let lo = (n_star.floor() as u64).max(1);
    let hi = (n_star.ceil() as u64).max(1);
    if time_per_substep(params, hi) < time_per_substep(params, lo) {
        hi
    } else {
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub seconds: f64,
}

/// Network latencies `tau`.
pub const LATENCY_PRESETS: [Preset; 4] = [
    Preset {
        name: "ec2",
        description: "Amazon EC2 cloud",
        seconds: 150e-6,
    },
    Preset {
        name: "gigabit-ethernet",
        description: "Typical Gigabit Ethernet",
        seconds: 50e-6,
    },
    Preset {
        name: "100g-ethernet",
        description: "Fast 100-Gigabit Ethernet",
        seconds: 5e-6,
    },
    Preset {
        name: "infiniband-fdr",
        description: "Mellanox 56Gb/s FDR InfiniBand",
        seconds: 0.7e-6,
    },
];

/// Compute costs `s` per step-point.
pub const COMPUTE_PRESETS: [Preset; 6] = [
    Preset {
        name: "nehalem-fe-system",
        description: "4000 flops (finite element system), 10 GFLOPS node",
        seconds: 400e-9,
    },
    Preset {
        name: "nehalem-fv-system",
        description: "200 flops (finite volume system), 10 GFLOPS node",
        seconds: 20e-9,
    },
    Preset {
        name: "nehalem-fd-scalar",
        description: "3 flops (finite difference scalar), 10 GFLOPS node",
        seconds: 0.3e-9,
    },
    Preset {
        name: "summit-fe-system",
        description: "4000 flops (finite element system), 40 TFLOPS node",
        seconds: 100e-12,
    },
    Preset {
        name: "summit-fv-system",
        description: "200 flops (finite volume system), 40 TFLOPS node",
        seconds: 5e-12,
    },
    Preset {
        name: "summit-fd-scalar",
        description: "3 flops (finite difference scalar), 40 TFLOPS node",
        seconds: 75e-15,
    },
];

/// All presets, latencies first.
pub fn presets() -> impl Iterator<Item = &'static Preset> {
    LATENCY_PRESETS.iter().chain(COMPUTE_PRESETS.iter())
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    presets().find(|p| p.name == name)
}

/// `PerfParams` from a latency preset and a compute preset.
pub fn preset_params(latency: &str, compute: &str) -> Option<PerfParams> {
    let tau = LATENCY_PRESETS.iter().find(|p| p.name == latency)?.seconds;
    let s = COMPUTE_PRESETS.iter().find(|p| p.name == compute)?.seconds;
    PerfParams::new(tau, s).ok()
}
