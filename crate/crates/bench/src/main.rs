use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use swept_bench::run::{append_records, read_endpoints_count};
use swept_bench::{
    calibrate_s, run, sweep, BenchError, DumpFormat, RunSpec, SweepOptions, TimingRecord,
    TransportSpec,
};
use swept_core::engines::Engine;

/// Runs and times the serial, classic and swept engines.
#[derive(Parser, Debug)]
#[command(name = "swept-bench", version, about)]
struct Args {
    /// Scheme: gradient-chain, advection, advection-rk2, ks, euler
    #[arg(long, default_value = "ks")]
    scheme: String,

    /// Engine, or a comma list for sweeps (default for sweeps: classic,swept)
    #[arg(long, value_delimiter = ',')]
    engine: Vec<String>,

    /// Ring size; taken from the endpoints file for tcp
    #[arg(long, default_value_t = 2)]
    nodes: usize,

    /// Points per node
    #[arg(long, default_value_t = 64)]
    points_per_node: usize,

    /// Sub-timesteps to run (a minimum, rounded up per n, in sweeps)
    #[arg(long, default_value_t = 1024)]
    substeps: u64,

    /// loopback | sim:tau=<dur>[,bw=<bytes/s>] | tcp:<endpoints-file>:<node-id>
    #[arg(long, default_value = "sim:tau=0")]
    transport: String,

    /// Override the scheme's default dt
    #[arg(long)]
    dt: Option<f64>,

    /// Append timing records to this CSV
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Write the final field (csv) or a space-time image (ppm)
    #[arg(long)]
    dump: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: String,

    /// Sweep over these points-per-node values
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,

    /// Measure seconds per step-point and fill the model columns
    #[arg(long)]
    calibrate: bool,

    /// Repetitions for calibration
    #[arg(long, default_value_t = 8)]
    reps: usize,

    /// Seed for --verify
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Check this many random plans for bitwise engine equivalence
    #[arg(long)]
    verify: Option<usize>,
}

fn engines(names: &[String], default: &[Engine]) -> Result<Vec<Engine>, BenchError> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse().map_err(|e: swept_core::engines::UnknownEngine| BenchError::Spec(e.to_string())))
        .collect()
}

fn print_records(records: &[TimingRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn main_inner(args: Args) -> Result<(), BenchError> {
    if let Some(count) = args.verify {
        let checked = swept_bench::verify::verify_random(args.seed, count)?;
        println!("{checked} random plans: serial, classic and swept agree bitwise");
        return Ok(());
    }

    let transport: TransportSpec = args.transport.parse()?;
    let nodes = match &transport {
        TransportSpec::Tcp { endpoints, .. } => read_endpoints_count(endpoints)?,
        TransportSpec::Loopback => 1,
        _ => args.nodes,
    };
    let format: DumpFormat = args.format.parse()?;
    let s = if args.calibrate {
        let total = nodes * args.points_per_node;
        let s = calibrate_s(&args.scheme, total.max(64), args.reps)?;
        eprintln!("calibrated s = {s:.4e} s per step-point");
        Some(s)
    } else {
        None
    };

    if let Some(ns) = args.sweep {
        let engines = engines(&args.engine, &[Engine::Classic, Engine::Swept])?;
        let template = RunSpec {
            dt: args.dt,
            seed: args.seed,
            ..RunSpec::new(&args.scheme, engines[0], nodes, ns[0], args.substeps)
                .with_transport(transport)
        };
        let records = sweep(
            &template,
            &SweepOptions {
                engines,
                ns,
                s,
                calibration_reps: args.reps,
            },
            args.csv.as_deref(),
        )?;
        return print_records(&records);
    }

    let engine = engines(&args.engine, &[Engine::Swept])?;
    if engine.len() != 1 {
        return Err(BenchError::Spec("a single run takes one engine".into()));
    }
    let spec = RunSpec {
        dt: args.dt,
        seed: args.seed,
        csv: None,
        dump: args.dump,
        format,
        ..RunSpec::new(&args.scheme, engine[0], nodes, args.points_per_node, args.substeps)
            .with_transport(transport)
    };
    let out = run(&spec, s)?;
    if let Some(path) = &args.csv {
        append_records(path, std::slice::from_ref(&out.record))?;
    }
    print_records(std::slice::from_ref(&out.record))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWEPT_LOG", "warn")).init();
    let args = Args::parse();
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swept-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
