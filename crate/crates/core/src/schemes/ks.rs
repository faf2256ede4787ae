//! Kuramoto–Sivashinsky, `u_t + u u_x + u_xx + u_xxxx = 0`, with second-order
//! central differences and the explicit midpoint rule.
//!
//! Four substeps per timestep:
//!
//! | substep | input              | output              |
//! |---------|--------------------|---------------------|
//! | 0       | `u0`               | `u0, u0_xx`         |
//! | 1       | `u0, u0_xx`        | `u0, u_half`        |
//! | 2       | `u0, u_half`       | `u0, u_half, uh_xx` |
//! | 3       | `u0, u_half, uh_xx`| `u1`                |
//!
//! `u_xxxx` is the central second difference of the forwarded `u_xx`, which
//! keeps every substep on an immediate-neighbour stencil.

use std::f64::consts::PI;

use thiserror::Error;

use crate::substep::{Kernel, SchemeSignature, StencilView, StepFault};

/// Safety factor applied to the explicit stability limit.
pub const DEFAULT_SAFETY: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KsParamsError {
    #[error("domain multiplier must be at least 1")]
    ZeroMultiplier,
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("need at least 3 grid points, got {0}")]
    TooFewPoints(usize),
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsParams {
    /// Domain length `L`.
    pub length: f64,
    pub points: usize,
    pub dt: f64,
}

impl KsParams {
    /// Default domain (multiplier 19, `L = 256 pi`) with the default dt.
    pub fn new(points: usize) -> Result<Self, KsParamsError> {
        Self::with_domain(19, points, None)
    }

    /// Domain sized with the grid so `dx` stays near `2/3`: the multiplier is
    /// `points / 64`, and grids under 64 points get the matching fraction of
    /// the unit domain. Coarser grids lose the fourth-derivative damping at
    /// the grid scale and blow up.
    pub fn resolved(points: usize, dt: Option<f64>) -> Result<Self, KsParamsError> {
        if points >= 64 {
            let multiplier = u32::try_from(points / 64).unwrap_or(u32::MAX);
            Self::with_domain(multiplier, points, dt)
        } else {
            Self::with_length(domain_length(1) * points as f64 / 64.0, points, dt)
        }
    }

    pub fn with_domain(
        multiplier: u32,
        points: usize,
        dt: Option<f64>,
    ) -> Result<Self, KsParamsError> {
        if multiplier == 0 {
            return Err(KsParamsError::ZeroMultiplier);
        }
        Self::with_length(domain_length(multiplier), points, dt)
    }

    pub fn with_length(length: f64, points: usize, dt: Option<f64>) -> Result<Self, KsParamsError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(KsParamsError::BadLength(length));
        }
        if points < 3 {
            return Err(KsParamsError::TooFewPoints(points));
        }
        let dt = dt.unwrap_or_else(|| default_dt(length / points as f64));
        if !(dt.is_finite() && dt > 0.0) {
            return Err(KsParamsError::BadDt(dt));
        }
        Ok(Self {
            length,
            points,
            dt,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Wavenumber of the cosine initial profile: `19/128` when the domain
    /// is a whole number of its periods, otherwise one period over `L`.
    pub fn cosine_wavenumber(&self) -> f64 {
        let periods = self.length / domain_length(1);
        if periods >= 1.0 && (periods - periods.round()).abs() < 1e-9 {
            19.0 / 128.0
        } else {
            2.0 * PI / self.length
        }
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.points as f64
    }
}

pub fn domain_length(multiplier: u32) -> f64 {
    f64::from(multiplier) * 256.0 * PI / 19.0
}

/// `0.8 * min(dx^4 / 16, dx / 8)`.
///
/// The first bound is the fourth-derivative explicit limit. The second keeps
/// the nonlinear advection CFL below ~0.5 for `|u| <= 4` on coarse grids, where
/// the fourth-derivative bound alone would allow enormous steps.
pub fn default_dt(dx: f64) -> f64 {
    DEFAULT_SAFETY * (dx.powi(4) / 16.0).min(dx / 8.0)
}

/// Initial profile of the K-S runs.
pub fn cosine_ic(x: f64) -> f64 {
    2.0 * (19.0 * x / 128.0).cos()
}

#[derive(Debug, Clone)]
pub struct KsKernel {
    sig: SchemeSignature,
    params: KsParams,
    dx: f64,
    initial: KsInitial,
}

/// Initial condition choices for K-S runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KsInitial {
    /// `2 cos(19 x / 128)`.
    Cosine,
    /// `amplitude * cos(wavenumber * x)`.
    Mode { amplitude: f64, wavenumber: f64 },
    Constant(f64),
}

impl KsKernel {
    pub fn new(params: KsParams) -> Self {
        Self::with_initial(params, KsInitial::Cosine)
    }

    pub fn with_initial(params: KsParams, initial: KsInitial) -> Self {
        Self {
            sig: SchemeSignature::new(&[(1, 2), (2, 2), (2, 3), (3, 1)]).expect("valid signature"),
            dx: params.dx(),
            params,
            initial,
        }
    }

    pub fn params(&self) -> &KsParams {
        &self.params
    }

    #[inline]
    fn second_difference(&self, l: f64, c: f64, r: f64) -> f64 {
        (r - 2.0 * c + l) / (self.dx * self.dx)
    }

    /// `-(u u_x + u_xx + u_xxxx)` from `(u, u_xx)` at the three stencil points.
    ///
    /// `u u_x` uses the skew-symmetric split `((u^2)_x + u u_x) / 3`, which
    /// conserves discrete energy and keeps coarse grids from blowing up
    /// through aliasing.
    #[inline]
    fn rhs(&self, u: [f64; 3], uxx: [f64; 3]) -> f64 {
        let inv = 1.0 / (2.0 * self.dx);
        let flux = (u[2] * u[2] - u[0] * u[0]) * inv;
        let advective = u[1] * (u[2] - u[0]) * inv;
        let uux = (flux + advective) / 3.0;
        let uxxxx = self.second_difference(uxx[0], uxx[1], uxx[2]);
        -(uux + uxx[1] + uxxxx)
    }
}

impl Kernel for KsKernel {
    fn name(&self) -> &str {
        "ks"
    }

    fn signature(&self) -> &SchemeSignature {
        &self.sig
    }

    fn dx(&self) -> f64 {
        self.dx
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn init(&self, _index: usize, x: f64, out: &mut [f64]) {
        out[0] = match self.initial {
            KsInitial::Cosine => 2.0 * (self.params.cosine_wavenumber() * x).cos(),
            KsInitial::Mode {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).cos(),
            KsInitial::Constant(c) => c,
        };
    }

    fn timestep(
        &self,
        substep: usize,
        view: &StencilView<'_>,
        out: &mut [f64],
    ) -> Result<(), StepFault> {
        let (l, c, r) = (view.left, view.center, view.right);
        match substep {
            0 => {
                out[0] = c[0];
                out[1] = self.second_difference(l[0], c[0], r[0]);
            }
            1 => {
                out[0] = c[0];
                out[1] = c[0] + 0.5 * view.dt * self.rhs([l[0], c[0], r[0]], [l[1], c[1], r[1]]);
            }
            2 => {
                out[0] = c[0];
                out[1] = c[1];
                out[2] = self.second_difference(l[1], c[1], r[1]);
            }
            _ => {
                out[0] = c[0] + view.dt * self.rhs([l[1], c[1], r[1]], [l[2], c[2], r[2]]);
            }
        }
        Ok(())
    }
}
