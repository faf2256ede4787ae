use std::time::{Duration, Instant};

use super::{EngineError, Field, Stepper};
use crate::substep::Kernel;

/// Steps all `points` of the periodic grid through `substeps` substeps.
pub fn run_serial(kernel: &dyn Kernel, points: usize, substeps: u64) -> Result<Field, EngineError> {
    run_serial_timed(kernel, points, substeps).map(|(f, _)| f)
}

/// Like [`run_serial`], also returning the stepping time.
pub fn run_serial_timed(
    kernel: &dyn Kernel,
    points: usize,
    substeps: u64,
) -> Result<(Field, Duration), EngineError> {
    let mut field = initial_field(kernel, points)?;
    let mut stepper = Stepper::new(kernel, points, false);
    let mut scratch = Vec::new();
    let clock = Instant::now();
    for _ in 0..substeps {
        advance(&mut stepper, &mut field, &mut scratch)?;
    }
    Ok((field, clock.elapsed()))
}

/// Snapshots at level 0 and every `every` substeps up to `substeps`; the
/// last snapshot is always at `substeps`.
pub fn run_serial_history(
    kernel: &dyn Kernel,
    points: usize,
    substeps: u64,
    every: u64,
) -> Result<Vec<Field>, EngineError> {
    let every = every.max(1);
    let mut field = initial_field(kernel, points)?;
    let mut stepper = Stepper::new(kernel, points, false);
    let mut scratch = Vec::new();
    let mut history = vec![field.clone()];
    for t in 1..=substeps {
        advance(&mut stepper, &mut field, &mut scratch)?;
        if t % every == 0 || t == substeps {
            history.push(field.clone());
        }
    }
    Ok(history)
}

fn initial_field(kernel: &dyn Kernel, points: usize) -> Result<Field, EngineError> {
    if points == 0 {
        return Err(EngineError::State("grid has no points"));
    }
    let stepper = Stepper::new(kernel, points, false);
    let mut values = Vec::new();
    stepper.init_row(0, points, &mut values);
    Ok(Field {
        level: 0,
        arity: kernel.signature().input_arity(0),
        values,
    })
}

/// The periodic neighbours become ghost frames on both ends so every point
/// goes through the same `step_row` call as in the distributed engines.
fn advance(
    stepper: &mut Stepper<'_>,
    field: &mut Field,
    scratch: &mut Vec<f64>,
) -> Result<(), EngineError> {
    let a = field.arity;
    let len = field.values.len();
    scratch.clear();
    scratch.extend_from_slice(&field.values[len - a..]);
    scratch.extend_from_slice(&field.values);
    scratch.extend_from_slice(&field.values[..a]);
    stepper.step_row(field.level, scratch, -1, &mut field.values)?;
    field.level += 1;
    field.arity = stepper.kernel().signature().input_arity(field.level);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{GodunovKernel, Stepping};

    #[test]
    fn zero_substeps_is_initial_field() {
        let k = GodunovKernel::advection(32, Stepping::ForwardEuler);
        let f = run_serial(&k, 32, 0).unwrap();
        assert_eq!(f.level, 0);
        let mut want = vec![0.0];
        for i in 0..32 {
            k.init(i, i as f64 / 32.0, &mut want);
            assert_eq!(f.values[i], want[0]);
        }
    }

    #[test]
    fn history_ends_at_final_level() {
        let k = GodunovKernel::advection(16, Stepping::Midpoint);
        let h = run_serial_history(&k, 16, 7, 3).unwrap();
        let levels: Vec<u64> = h.iter().map(|f| f.level).collect();
        assert_eq!(levels, vec![0, 3, 6, 7]);
        assert!(h[3].bitwise_eq(&run_serial(&k, 16, 7).unwrap()));
    }
}
