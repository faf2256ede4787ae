//! Scheme-agnostic kernel contract.
//!
//! A discretization is a cyclic chain of sub-timesteps. Each sub-timestep
//! reads the variables of a point and of its two immediate neighbours and
//! writes the variables of that point one level up. Variables that a later
//! sub-timestep needs but the current one does not touch are forwarded, so
//! no sub-timestep ever needs neighbours of neighbours.

use std::fmt;

use thiserror::Error;

/// Largest number of scalars a single point may carry at any level.
pub const MAX_ARITY: usize = 16;

/// Input and output variable counts of one sub-timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arity {
    pub input: usize,
    pub output: usize,
}

/// Per-substep arities of a scheme. Index `k` describes substep `k mod S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSignature {
    arities: Vec<Arity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureViolation {
    #[error("a scheme needs at least one sub-timestep")]
    Empty,
    #[error("substep {substep} has a zero arity")]
    ZeroArity { substep: usize },
    #[error("substep {substep} has arity above the supported maximum {MAX_ARITY}")]
    TooWide { substep: usize },
    #[error("substep {substep} outputs {output} values but substep {next} takes {input}")]
    Chain {
        substep: usize,
        next: usize,
        output: usize,
        input: usize,
    },
}

impl SchemeSignature {
    /// Builds and validates a signature from `(input, output)` pairs.
    pub fn new(pairs: &[(usize, usize)]) -> Result<Self, SignatureViolation> {
        let sig = Self::unchecked(pairs);
        validate_signature(&sig)?;
        Ok(sig)
    }

    /// Builds a signature without checking the chaining rule.
    pub fn unchecked(pairs: &[(usize, usize)]) -> Self {
        Self {
            arities: pairs
                .iter()
                .map(|&(input, output)| Arity { input, output })
                .collect(),
        }
    }

    pub fn substeps(&self) -> usize {
        self.arities.len()
    }

    pub fn arities(&self) -> &[Arity] {
        &self.arities
    }

    /// Substep index executed on frames at `level`.
    #[inline]
    pub fn substep_of(&self, level: u64) -> usize {
        (level % self.arities.len() as u64) as usize
    }

    /// Number of scalars a frame at `level` carries.
    #[inline]
    pub fn input_arity(&self, level: u64) -> usize {
        self.arities[self.substep_of(level)].input
    }

    #[inline]
    pub fn output_arity(&self, level: u64) -> usize {
        self.arities[self.substep_of(level)].output
    }

    pub fn max_arity(&self) -> usize {
        self.arities
            .iter()
            .map(|a| a.input.max(a.output))
            .max()
            .unwrap_or(0)
    }
}

/// Checks the cyclic chaining rule `output[k] == input[(k + 1) mod S]`.
///
/// The report names the first offending substep.
pub fn validate_signature(sig: &SchemeSignature) -> Result<(), SignatureViolation> {
    let arities = sig.arities();
    if arities.is_empty() {
        return Err(SignatureViolation::Empty);
    }
    for (k, a) in arities.iter().enumerate() {
        if a.input == 0 || a.output == 0 {
            return Err(SignatureViolation::ZeroArity { substep: k });
        }
        if a.input > MAX_ARITY || a.output > MAX_ARITY {
            return Err(SignatureViolation::TooWide { substep: k });
        }
    }
    for k in 0..arities.len() {
        let next = (k + 1) % arities.len();
        if arities[k].output != arities[next].input {
            return Err(SignatureViolation::Chain {
                substep: k,
                next,
                output: arities[k].output,
                input: arities[next].input,
            });
        }
    }
    Ok(())
}

/// Variables of one point at one substep level.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub level: u64,
    pub values: Vec<f64>,
}

impl PointFrame {
    pub fn new(level: u64, values: Vec<f64>) -> Self {
        Self { level, values }
    }
}

/// What a kernel sees when it advances one point by one sub-timestep.
#[derive(Debug, Clone, Copy)]
pub struct StencilView<'a> {
    pub left: &'a [f64],
    pub center: &'a [f64],
    pub right: &'a [f64],
    pub dx: f64,
    pub dt: f64,
}

/// A kernel refused to produce output because its input is unphysical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct StepFault(pub &'static str);

/// A discretization split into compact-stencil sub-timesteps.
///
/// `timestep` must be a pure function of `(substep, view)`: engines rely on
/// this to produce bitwise-identical fields whatever order they visit
/// points in.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &str;

    fn signature(&self) -> &SchemeSignature;

    /// Grid spacing, frozen at construction.
    fn dx(&self) -> f64;

    /// Timestep size, frozen at construction.
    fn dt(&self) -> f64;

    /// Writes the level-0 variables of point `index` located at `x`.
    fn init(&self, index: usize, x: f64, out: &mut [f64]);

    /// Writes the outputs of sub-timestep `substep` for the view's center.
    fn timestep(
        &self,
        substep: usize,
        view: &StencilView<'_>,
        out: &mut [f64],
    ) -> Result<(), StepFault>;
}

impl fmt::Debug for dyn Kernel + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name())
            .field("signature", self.signature())
            .field("dx", &self.dx())
            .field("dt", &self.dt())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("arity mismatch at level {level}: expected {expected} values, got {got}")]
    ArityMismatch {
        level: u64,
        expected: usize,
        got: usize,
    },
    #[error("non-finite output at point {point:?}, level {level}, component {component}")]
    NonFinite {
        point: Option<usize>,
        level: u64,
        component: usize,
    },
    #[error("unphysical state at point {point:?}, level {level}: {reason}")]
    Unphysical {
        point: Option<usize>,
        level: u64,
        reason: &'static str,
    },
}

impl KernelError {
    pub(crate) fn at_point(self, index: usize) -> Self {
        match self {
            KernelError::NonFinite {
                level, component, ..
            } => KernelError::NonFinite {
                point: Some(index),
                level,
                component,
            },
            KernelError::Unphysical { level, reason, .. } => KernelError::Unphysical {
                point: Some(index),
                level,
                reason,
            },
            other => other,
        }
    }
}

/// Runs one sub-timestep with level and arity bookkeeping.
///
/// `level` is the level of the three input frames; the result sits at
/// `level + 1`.
pub fn apply_kernel(
    kernel: &dyn Kernel,
    level: u64,
    view: &StencilView<'_>,
) -> Result<PointFrame, KernelError> {
    let sig = kernel.signature();
    let expected = sig.input_arity(level);
    for side in [view.left, view.center, view.right] {
        if side.len() != expected {
            return Err(KernelError::ArityMismatch {
                level,
                expected,
                got: side.len(),
            });
        }
    }
    let mut out = vec![0.0; sig.output_arity(level)];
    step_point(kernel, level, view, &mut out)?;
    Ok(PointFrame::new(level + 1, out))
}

/// Hot-path variant of [`apply_kernel`] used by the engines: no arity
/// checks, writes into a caller-provided buffer.
#[inline]
pub(crate) fn step_point(
    kernel: &dyn Kernel,
    level: u64,
    view: &StencilView<'_>,
    out: &mut [f64],
) -> Result<(), KernelError> {
    let substep = kernel.signature().substep_of(level);
    kernel
        .timestep(substep, view, out)
        .map_err(|StepFault(reason)| KernelError::Unphysical {
            point: None,
            level,
            reason,
        })?;
    if let Some(component) = out.iter().position(|v| !v.is_finite()) {
        return Err(KernelError::NonFinite {
            point: None,
            level,
            component,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `k0`: copy + central gradient, `k1`: sum of both. Used only here.
    struct Probe {
        sig: SchemeSignature,
    }

    impl Probe {
        fn new() -> Self {
            Self {
                sig: SchemeSignature::new(&[(1, 2), (2, 1)]).unwrap(),
            }
        }
    }

    impl Kernel for Probe {
        fn name(&self) -> &str {
            "probe"
        }
        fn signature(&self) -> &SchemeSignature {
            &self.sig
        }
        fn dx(&self) -> f64 {
            1.0
        }
        fn dt(&self) -> f64 {
            0.1
        }
        fn init(&self, _index: usize, x: f64, out: &mut [f64]) {
            out[0] = x;
        }
        fn timestep(
            &self,
            substep: usize,
            view: &StencilView<'_>,
            out: &mut [f64],
        ) -> Result<(), StepFault> {
            match substep {
                0 => {
                    out[0] = view.center[0];
                    out[1] = (view.right[0] - view.left[0]) / (2.0 * view.dx);
                }
                _ => {
                    if view.center[0] < -1e300 {
                        return Err(StepFault("probe underflow"));
                    }
                    out[0] = view.center[0] + view.center[1] * 1e308 * 10.0;
                }
            }
            Ok(())
        }
    }

    #[test]
    fn midpoint_listing_signature_is_valid() {
        assert!(validate_signature(&SchemeSignature::unchecked(&[(1, 2), (2, 1)])).is_ok());
    }

    #[test]
    fn identity_chain_is_valid() {
        assert!(validate_signature(&SchemeSignature::unchecked(&[(1, 1)])).is_ok());
    }

    #[test]
    fn broken_chain_names_first_substep() {
        let err = validate_signature(&SchemeSignature::unchecked(&[(1, 2), (3, 1)])).unwrap_err();
        assert_eq!(
            err,
            SignatureViolation::Chain {
                substep: 0,
                next: 1,
                output: 2,
                input: 3
            }
        );
    }

    #[test]
    fn zero_arity_and_empty_are_rejected() {
        assert_eq!(
            validate_signature(&SchemeSignature::unchecked(&[])),
            Err(SignatureViolation::Empty)
        );
        assert_eq!(
            validate_signature(&SchemeSignature::unchecked(&[(0, 0)])),
            Err(SignatureViolation::ZeroArity { substep: 0 })
        );
    }

    #[test]
    fn apply_kernel_tracks_level_and_arity() {
        let k = Probe::new();
        let view = StencilView {
            left: &[1.0],
            center: &[2.0],
            right: &[4.0],
            dx: 1.0,
            dt: 0.1,
        };
        let out = apply_kernel(&k, 0, &view).unwrap();
        assert_eq!(out.level, 1);
        assert_eq!(out.values, vec![2.0, 1.5]);
    }

    #[test]
    fn apply_kernel_rejects_wrong_arity() {
        let k = Probe::new();
        let view = StencilView {
            left: &[1.0, 0.0],
            center: &[2.0],
            right: &[4.0],
            dx: 1.0,
            dt: 0.1,
        };
        assert!(matches!(
            apply_kernel(&k, 0, &view),
            Err(KernelError::ArityMismatch {
                level: 0,
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn apply_kernel_reports_non_finite_output() {
        let k = Probe::new();
        let view = StencilView {
            left: &[0.0, 0.0],
            center: &[0.0, 1.0],
            right: &[0.0, 0.0],
            dx: 1.0,
            dt: 0.1,
        };
        assert!(matches!(
            apply_kernel(&k, 3, &view),
            Err(KernelError::NonFinite {
                level: 3,
                component: 0,
                ..
            })
        ));
    }

    #[test]
    fn apply_kernel_reports_faults() {
        let k = Probe::new();
        let view = StencilView {
            left: &[0.0, 0.0],
            center: &[-2e300, 0.0],
            right: &[0.0, 0.0],
            dx: 1.0,
            dt: 0.1,
        };
        let err = apply_kernel(&k, 1, &view).unwrap_err().at_point(7);
        assert_eq!(
            err,
            KernelError::Unphysical {
                point: Some(7),
                level: 1,
                reason: "probe underflow"
            }
        );
    }
}
