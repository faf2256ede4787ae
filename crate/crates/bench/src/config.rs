use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use swept_core::engines::{DecompositionPlan, Engine};
use swept_core::schemes::CATALOG;
use swept_core::transport::LatencyProfile;

use crate::error::BenchError;

/// Where node messages travel.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportSpec {
    /// Single-node self ring.
    Loopback,
    /// In-process ring with `tau` seconds latency and optional bandwidth
    /// in bytes per second.
    Sim { tau: f64, bandwidth: Option<f64> },
    /// This process is node `node` of the ring listed in `endpoints`.
    Tcp { endpoints: PathBuf, node: usize },
}

impl TransportSpec {
    pub fn profile(&self) -> Option<LatencyProfile> {
        match *self {
            TransportSpec::Sim { tau, bandwidth } => {
                LatencyProfile::new(tau, bandwidth.map_or(0.0, |b| 1.0 / b))
            }
            _ => None,
        }
    }
}

impl fmt::Display for TransportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportSpec::Loopback => f.write_str("loopback"),
            TransportSpec::Sim { tau, bandwidth } => {
                write!(f, "sim:tau={}us", tau * 1e6)?;
                if let Some(bw) = bandwidth {
                    write!(f, ",bw={bw}")?;
                }
                Ok(())
            }
            TransportSpec::Tcp { endpoints, node } => {
                write!(f, "tcp:{}:{node}", endpoints.display())
            }
        }
    }
}

impl FromStr for TransportSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| BenchError::Spec(format!("transport `{s}`: {why}"));
        if s == "loopback" {
            return Ok(TransportSpec::Loopback);
        }
        if let Some(rest) = s.strip_prefix("sim:") {
            let mut tau = None;
            let mut bandwidth = None;
            for part in rest.split(',') {
                let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                match key.trim() {
                    "tau" => tau = Some(parse_duration(value).map_err(|e| bad(&e))?),
                    "bw" => {
                        let bw: f64 = value.trim().parse().map_err(|_| bad("bad bandwidth"))?;
                        if !(bw.is_finite() && bw > 0.0) {
                            return Err(bad("bandwidth must be positive"));
                        }
                        bandwidth = Some(bw);
                    }
                    other => return Err(bad(&format!("unknown key `{other}`"))),
                }
            }
            let tau = tau.ok_or_else(|| bad("missing tau"))?;
            return Ok(TransportSpec::Sim { tau, bandwidth });
        }
        if let Some(rest) = s.strip_prefix("tcp:") {
            let (path, node) = rest.rsplit_once(':').ok_or_else(|| bad("expected tcp:<file>:<id>"))?;
            let node = node.parse().map_err(|_| bad("bad node id"))?;
            if path.is_empty() {
                return Err(bad("missing endpoints file"));
            }
            return Ok(TransportSpec::Tcp {
                endpoints: PathBuf::from(path),
                node,
            });
        }
        Err(bad("expected loopback, sim:tau=<dur>[,bw=<bytes/s>] or tcp:<file>:<id>"))
    }
}

/// Parses `150us`, `150µs`, `1.5ms`, `2s`, `800ns`; a bare number is seconds.
pub fn parse_duration(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let split = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
        .unwrap_or(s.len());
    let (number, unit) = s.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| format!("bad duration `{s}`"))?;
    let per_second = match unit.trim() {
        "" | "s" => 1.0,
        "ms" => 1e3,
        "us" | "µs" => 1e6,
        "ns" => 1e9,
        other => return Err(format!("unknown duration unit `{other}`")),
    };
    let secs = value / per_second;
    if secs.is_finite() && secs >= 0.0 {
        Ok(secs)
    } else {
        Err(format!("duration `{s}` must be non-negative"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DumpFormat {
    #[default]
    Csv,
    Ppm,
}

impl FromStr for DumpFormat {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(DumpFormat::Csv),
            "ppm" => Ok(DumpFormat::Ppm),
            other => Err(BenchError::Spec(format!("unknown dump format `{other}`"))),
        }
    }
}

/// One benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scheme: String,
    pub engine: Engine,
    pub nodes: usize,
    pub points_per_node: usize,
    pub substeps: u64,
    pub transport: TransportSpec,
    pub dt: Option<f64>,
    pub seed: u64,
    /// Timing records are appended here.
    pub csv: Option<PathBuf>,
    /// Final field (csv) or space-time history (ppm) goes here.
    pub dump: Option<PathBuf>,
    pub format: DumpFormat,
}

impl RunSpec {
    pub fn new(scheme: &str, engine: Engine, nodes: usize, points_per_node: usize, substeps: u64) -> Self {
        Self {
            scheme: scheme.to_string(),
            engine,
            nodes,
            points_per_node,
            substeps,
            transport: if nodes == 1 {
                TransportSpec::Loopback
            } else {
                TransportSpec::Sim {
                    tau: 0.0,
                    bandwidth: None,
                }
            },
            dt: None,
            seed: 0,
            csv: None,
            dump: None,
            format: DumpFormat::Csv,
        }
    }

    pub fn with_transport(mut self, transport: TransportSpec) -> Self {
        self.transport = transport;
        self
    }

    pub fn plan(&self) -> Result<DecompositionPlan, BenchError> {
        DecompositionPlan::per_node(self.points_per_node, self.nodes)
            .map_err(|e| BenchError::Spec(e.to_string()))
    }

    /// Checks names, plan and transport compatibility.
    pub fn validate(&self) -> Result<DecompositionPlan, BenchError> {
        if !CATALOG.contains(&self.scheme.as_str()) {
            return Err(BenchError::Spec(format!(
                "unknown scheme `{}` (available: {})",
                self.scheme,
                CATALOG.join(", ")
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(BenchError::Spec(format!("dt must be positive, got {dt}")));
            }
        }
        let plan = self.plan()?;
        match (&self.transport, self.engine) {
            (TransportSpec::Loopback, _) if self.nodes != 1 && self.engine != Engine::Serial => {
                return Err(BenchError::Spec(format!(
                    "loopback is a single-node ring, got {} nodes",
                    self.nodes
                )));
            }
            (TransportSpec::Tcp { .. }, Engine::Serial) => {
                return Err(BenchError::Spec("the serial engine does not use tcp".into()));
            }
            _ => {}
        }
        Ok(plan)
    }
}
