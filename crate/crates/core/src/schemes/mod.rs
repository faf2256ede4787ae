//! Concrete kernels and the scheme catalog.

pub mod euler;
pub mod godunov;
pub mod gradient;
pub mod ks;
pub mod riemann;

use std::sync::Arc;

use thiserror::Error;

pub use euler::{
    euler_kernel, minmod, reconstruct_with_limiter, sod_states, EulerInitial, EulerKernel,
    EulerState,
};
pub use godunov::{godunov_substep, Burgers, GodunovKernel, LinearAdvection, ScalarLaw, Stepping};
pub use gradient::{gradient_substep, GradientChain};
pub use ks::{KsInitial, KsKernel, KsParams};
pub use riemann::{exact_riemann, star_state, RiemannError, StarState};

use crate::substep::Kernel;

/// Names accepted by [`build`].
pub const CATALOG: &[&str] = &["gradient-chain", "advection", "advection-rk2", "ks", "euler"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("unknown scheme `{0}` (available: {})", CATALOG.join(", "))]
    Unknown(String),
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
    #[error(transparent)]
    Ks(#[from] ks::KsParamsError),
    #[error(transparent)]
    Euler(#[from] euler::EulerConfigError),
}

/// Builds a catalog scheme on a periodic grid of `points` points with its
/// default initial condition. K-S uses [`KsParams::resolved`]; Euler runs
/// the shock tube on `[0, 1)`. `dt` overrides the scheme's default step.
pub fn build(name: &str, points: usize, dt: Option<f64>) -> Result<Arc<dyn Kernel>, SchemeError> {
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SchemeError::BadDt(dt));
        }
    }
    let kernel: Arc<dyn Kernel> = match name {
        "gradient-chain" => {
            let k = GradientChain::on_unit_domain(points);
            Arc::new(GradientChain::new(k.kappa(), k.dx(), dt.unwrap_or(k.dt())))
        }
        "advection" | "advection-rk2" => {
            let stepping = if name == "advection" {
                Stepping::ForwardEuler
            } else {
                Stepping::Midpoint
            };
            let k = GodunovKernel::advection(points, stepping);
            Arc::new(GodunovKernel::new(
                LinearAdvection::default(),
                stepping,
                k.dx(),
                dt.unwrap_or(k.dt()),
            ))
        }
        "ks" => Arc::new(KsKernel::new(KsParams::resolved(points, dt)?)),
        "euler" => Arc::new(EulerKernel::for_initial(EulerInitial::Sod, points, dt)?),
        other => return Err(SchemeError::Unknown(other.to_string())),
    };
    Ok(kernel)
}
