use std::fs::OpenOptions;
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};
use swept_core::engines::{
    classic_node, run_ring, run_serial_history, run_serial_timed, swept_node, DecompositionPlan,
    Engine, EngineOptions, Field,
};
use swept_core::perf_model::{classic_time_per_substep, time_per_substep, PerfParams};
use swept_core::schemes;
use swept_core::substep::Kernel;
use swept_core::transport::{
    measure_latency, read_endpoints, sim_ring, LatencyProfile, LoopbackTransport, RingTransport,
    TcpEndpoint, TcpOptions,
};

use crate::config::{DumpFormat, RunSpec, TransportSpec};
use crate::dump::{write_field_csv, write_history_ppm};
use crate::error::BenchError;

/// Pings used to estimate latency before a run.
pub const PING_REPS: usize = 32;

/// One row of the timing CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub scheme: String,
    pub engine: String,
    pub p: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub substeps: u64,
    pub wall_time_s: f64,
    pub time_per_substep_s: f64,
    pub messages_sent: u64,
    pub tau_s: Option<f64>,
    pub s_s: Option<f64>,
    pub model_swept_s: Option<f64>,
    pub model_classic_s: Option<f64>,
}

impl TimingRecord {
    /// Fills the model columns from `tau` and `s` when both are usable.
    pub fn with_model(mut self, tau: Option<f64>, s: Option<f64>) -> Self {
        self.tau_s = tau;
        self.s_s = s;
        if let (Some(tau), Some(s)) = (tau, s) {
            if let Ok(params) = PerfParams::new(tau, s) {
                self.model_swept_s = Some(time_per_substep(&params, self.n as u64));
                self.model_classic_s = Some(classic_time_per_substep(&params, self.n as u64));
            }
        }
        self
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: TimingRecord,
    /// Final field: the whole grid, or this node's window in tcp mode.
    pub field: Field,
    /// Global index of `field`'s first point.
    pub window_start: usize,
}

/// Executes one run, appends its record to `spec.csv` and writes
/// `spec.dump`. `s` fills the model columns when known.
pub fn run(spec: &RunSpec, s: Option<f64>) -> Result<RunOutput, BenchError> {
    let out = execute(spec, s)?;
    if let Some(path) = &spec.csv {
        append_records(path, std::slice::from_ref(&out.record))?;
    }
    if let Some(path) = &spec.dump {
        match spec.format {
            DumpFormat::Csv => {
                let kernel = build_kernel(spec, &spec.plan()?)?;
                write_field_csv(path, &out.field, out.window_start, kernel.dx())?;
            }
            DumpFormat::Ppm => {
                let plan = spec.plan()?;
                let kernel = build_kernel(spec, &plan)?;
                let history = space_time_history(kernel.as_ref(), plan.total(), spec.substeps)?;
                write_history_ppm(path, &history)?;
            }
        }
    }
    Ok(out)
}

/// Executes one run without writing any files.
pub fn execute(spec: &RunSpec, s: Option<f64>) -> Result<RunOutput, BenchError> {
    let plan = spec.validate()?;
    let kernel = build_kernel(spec, &plan)?;
    let options = EngineOptions::default();

    let (field, window_start, wall, messages, tau) = match (&spec.transport, spec.engine) {
        (_, Engine::Serial) => {
            let (field, elapsed) = run_serial_timed(kernel.as_ref(), plan.total(), spec.substeps)?;
            (field, 0, elapsed.as_secs_f64(), 0, None)
        }
        (TransportSpec::Loopback, engine) => {
            let out = run_ring(
                engine,
                kernel.as_ref(),
                &plan,
                spec.substeps,
                vec![LoopbackTransport::new()],
                &options,
            )?;
            let messages = out.reports[0].transport.messages_sent;
            (out.field.clone(), 0, out.wall_time().as_secs_f64(), messages, None)
        }
        (TransportSpec::Sim { .. }, engine) => {
            let profile = spec
                .transport
                .profile()
                .ok_or_else(|| BenchError::Spec("bad latency profile".into()))?;
            let tau = measure_sim_latency(plan.nodes(), profile)?;
            let out = run_ring(
                engine,
                kernel.as_ref(),
                &plan,
                spec.substeps,
                sim_ring(plan.nodes(), profile),
                &options,
            )?;
            let messages = out.reports[0].transport.messages_sent;
            (out.field.clone(), 0, out.wall_time().as_secs_f64(), messages, Some(tau))
        }
        (TransportSpec::Tcp { endpoints, node }, engine) => {
            run_tcp_node(kernel.as_ref(), &plan, spec, engine, endpoints, *node)?
        }
    };

    if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
        return Err(BenchError::BlowUp(format!(
            "non-finite value in final field at point {}",
            window_start + i / field.arity
        )));
    }

    let record = TimingRecord {
        scheme: spec.scheme.clone(),
        engine: spec.engine.to_string(),
        p: plan.nodes(),
        n: plan.points_per_node(),
        substeps: spec.substeps,
        wall_time_s: wall,
        time_per_substep_s: if spec.substeps > 0 {
            wall / spec.substeps as f64
        } else {
            0.0
        },
        messages_sent: messages,
        tau_s: None,
        s_s: None,
        model_swept_s: None,
        model_classic_s: None,
    }
    .with_model(tau, s);
    Ok(RunOutput {
        record,
        field,
        window_start,
    })
}

type NodeResult = (Field, usize, f64, u64, Option<f64>);

fn run_tcp_node(
    kernel: &dyn Kernel,
    plan: &DecompositionPlan,
    spec: &RunSpec,
    engine: Engine,
    endpoints: &Path,
    node: usize,
) -> Result<NodeResult, BenchError> {
    let endpoints = read_endpoints(endpoints)?;
    if endpoints.len() != plan.nodes() {
        return Err(BenchError::Spec(format!(
            "endpoints file lists {} nodes, run asks for {}",
            endpoints.len(),
            plan.nodes()
        )));
    }
    let mut transport = TcpEndpoint::connect(&endpoints, node, TcpOptions::default())?;
    let tau = measure_latency(&mut transport, PING_REPS)?;
    let before = transport.stats();
    let options = EngineOptions::default();
    let out = match engine {
        Engine::Classic => classic_node(kernel, plan, node, spec.substeps, &mut transport, &options, None)?,
        _ => swept_node(kernel, plan, node, spec.substeps, &mut transport, &options, None)?,
    };
    let field = Field {
        level: out.level,
        arity: out.arity,
        values: out.values,
    };
    let messages = out.report.transport.messages_sent - before.messages_sent;
    Ok((
        field,
        out.window_start,
        out.report.elapsed.as_secs_f64(),
        messages,
        tau,
    ))
}

pub(crate) fn build_kernel(
    spec: &RunSpec,
    plan: &DecompositionPlan,
) -> Result<std::sync::Arc<dyn Kernel>, BenchError> {
    schemes::build(&spec.scheme, plan.total(), spec.dt).map_err(|e| BenchError::Spec(e.to_string()))
}

/// One-way latency of a fresh simulated ring with `profile`, measured
/// the same way as over tcp.
pub fn measure_sim_latency(nodes: usize, profile: LatencyProfile) -> Result<f64, BenchError> {
    let handles: Vec<_> = sim_ring(nodes, profile)
        .into_iter()
        .map(|mut t| thread::spawn(move || measure_latency(&mut t, PING_REPS)))
        .collect();
    let mut estimate = None;
    for h in handles {
        let r = h
            .join()
            .map_err(|_| BenchError::Transport("latency probe panicked".into()))??;
        estimate = estimate.or(r);
    }
    estimate.ok_or_else(|| BenchError::Transport("no latency estimate".into()))
}

/// Seconds per step-point: the median over `reps` latency-free serial runs
/// of wall time divided by `points * substeps`.
pub fn calibrate_s(scheme: &str, points: usize, reps: usize) -> Result<f64, BenchError> {
    if reps < 8 {
        return Err(BenchError::Spec(format!("calibration needs at least 8 reps, got {reps}")));
    }
    let kernel = schemes::build(scheme, points, None).map_err(|e| BenchError::Spec(e.to_string()))?;
    let cycle = kernel.signature().substeps() as u64;
    let target = (1u64 << 20) / points.max(1) as u64;
    let substeps = cycle * target.div_ceil(cycle).max(1);
    run_serial_timed(kernel.as_ref(), points, substeps)?;
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (_, elapsed) = run_serial_timed(kernel.as_ref(), points, substeps)?;
        samples.push(elapsed.as_secs_f64() / (points as f64 * substeps as f64));
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[samples.len() / 2])
}

/// Up to 512 whole-timestep snapshots of a serial run, for images.
pub fn space_time_history(
    kernel: &dyn Kernel,
    points: usize,
    substeps: u64,
) -> Result<Vec<Field>, BenchError> {
    let cycle = kernel.signature().substeps() as u64;
    let every = cycle * (substeps / (cycle * 512)).max(1);
    let mut history = run_serial_history(kernel, points, substeps, every)?;
    history.retain(|f| f.level % cycle == 0);
    Ok(history)
}

/// Appends records, writing the header when the file is new or empty.
pub fn append_records(path: &Path, records: &[TimingRecord]) -> Result<(), BenchError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TimingRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Ring size listed in an endpoints file.
pub fn read_endpoints_count(path: &Path) -> Result<usize, BenchError> {
    Ok(read_endpoints(path)?.len())
}
