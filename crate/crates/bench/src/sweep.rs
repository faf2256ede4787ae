use std::collections::HashSet;
use std::path::Path;

use swept_core::engines::Engine;

use crate::config::{RunSpec, TransportSpec};
use crate::error::BenchError;
use crate::run::{append_records, calibrate_s, execute, measure_sim_latency, read_records, TimingRecord};

/// Points used when calibrating `s` for a sweep.
pub const CALIBRATION_POINTS: usize = 4096;

/// Substeps run at points-per-node `n`: `minimum` rounded up to a whole
/// number of swept stages, so no sweep point ends in halo steps.
pub fn substeps_for(minimum: u64, n: usize) -> u64 {
    let half = (n / 2).max(1) as u64;
    minimum.max(half).div_ceil(half) * half
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub engines: Vec<Engine>,
    pub ns: Vec<usize>,
    /// Known `s`; calibrated when absent.
    pub s: Option<f64>,
    pub calibration_reps: usize,
}

/// Runs every `(engine, n)` pair not already in `csv`, appending each
/// record as soon as it is measured. Returns all records for the template's
/// scheme and node count, old and new.
pub fn sweep(
    template: &RunSpec,
    options: &SweepOptions,
    csv: Option<&Path>,
) -> Result<Vec<TimingRecord>, BenchError> {
    if options.ns.len() < 2 {
        return Err(BenchError::Spec("a sweep needs at least two n values".into()));
    }
    if matches!(template.transport, TransportSpec::Tcp { .. }) {
        return Err(BenchError::Spec("sweeps run on in-process transports".into()));
    }
    for &n in &options.ns {
        RunSpec {
            points_per_node: n,
            ..template.clone()
        }
        .validate()?;
    }

    let mut records = match csv {
        Some(path) if path.exists() => read_records(path)?,
        _ => Vec::new(),
    };
    let done: HashSet<(String, String, usize, usize)> = records
        .iter()
        .map(|r| (r.scheme.clone(), r.engine.clone(), r.p, r.n))
        .collect();

    let s = match options.s {
        Some(s) => s,
        None => calibrate_s(&template.scheme, CALIBRATION_POINTS, options.calibration_reps)?,
    };
    let tau = match template.transport.profile() {
        Some(profile) => Some(measure_sim_latency(template.nodes, profile)?),
        None => None,
    };
    log::info!("sweep {}: s = {s:.3e} s, tau = {tau:?}", template.scheme);

    for &n in &options.ns {
        for &engine in &options.engines {
            let key = (template.scheme.clone(), engine.to_string(), template.nodes, n);
            if done.contains(&key) {
                log::info!("skipping {} n={n}: already recorded", engine);
                continue;
            }
            let spec = RunSpec {
                engine,
                points_per_node: n,
                substeps: substeps_for(template.substeps, n),
                csv: None,
                dump: None,
                ..template.clone()
            };
            let warm = RunSpec {
                substeps: substeps_for(1, n).max(n as u64),
                ..spec.clone()
            };
            execute(&warm, None)?;
            let record = execute(&spec, None)?.record.with_model(tau, Some(s));
            log::info!(
                "{} n={n}: {:.3e} s per substep",
                engine,
                record.time_per_substep_s
            );
            if let Some(path) = csv {
                append_records(path, std::slice::from_ref(&record))?;
            }
            records.push(record);
        }
    }
    records.retain(|r| r.scheme == template.scheme && r.p == template.nodes);
    Ok(records)
}
