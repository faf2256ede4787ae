//! Benchmark harness for the swept and classic engines: single runs, sweeps
//! over points per node, `s` calibration and field output.

pub mod config;
pub mod dump;
pub mod error;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{parse_duration, DumpFormat, RunSpec, TransportSpec};
pub use error::BenchError;
pub use run::{calibrate_s, execute, run, RunOutput, TimingRecord};
pub use sweep::{substeps_for, sweep, SweepOptions};
