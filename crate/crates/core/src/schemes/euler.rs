//! 1D Euler equations of gas dynamics: second-order finite volume with a
//! minmod-limited reconstruction, scalar dissipation scaled by the Roe-matrix
//! spectral radius, and the explicit midpoint rule.
//!
//! Substep layout (3 conserved variables per block):
//!
//! | substep | input          | output            |
//! |---------|----------------|-------------------|
//! | 0       | `u0`           | `u0, d0`          |
//! | 1       | `u0, d0`       | `u0, uh`          |
//! | 2       | `u0, uh`       | `u0, uh, dh`      |
//! | 3       | `u0, uh, dh`   | `u1`              |
//!
//! `d` is the central-difference derivative of the conserved variables.

use thiserror::Error;

use crate::substep::{Kernel, SchemeSignature, StencilView, StepFault};

pub const DEFAULT_GAMMA: f64 = 1.4;
pub const DEFAULT_CFL: f64 = 0.4;

/// Conserved state `(rho, rho u, E)` plus the ratio of specific heats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub rho: f64,
    pub mom: f64,
    pub ene: f64,
    pub gamma: f64,
}

impl EulerState {
    pub fn from_primitive(rho: f64, velocity: f64, pressure: f64, gamma: f64) -> Self {
        Self {
            rho,
            mom: rho * velocity,
            ene: pressure / (gamma - 1.0) + 0.5 * rho * velocity * velocity,
            gamma,
        }
    }

    pub fn velocity(&self) -> f64 {
        self.mom / self.rho
    }

    pub fn pressure(&self) -> f64 {
        (self.gamma - 1.0) * (self.ene - self.mom * self.mom / (2.0 * self.rho))
    }

    pub fn sound_speed(&self) -> f64 {
        (self.gamma * self.pressure() / self.rho).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.rho > 0.0 && self.pressure() > 0.0
    }

    pub fn conserved(&self) -> [f64; 3] {
        [self.rho, self.mom, self.ene]
    }

    /// Same state seen in a mirrored coordinate system.
    pub fn mirrored(&self) -> Self {
        Self {
            mom: -self.mom,
            ..*self
        }
    }
}

/// Returns 0 if the arguments disagree in sign, else the one of smaller magnitude.
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// Face value of the cell holding `u_this`, on the face shared with `u_other`.
///
/// `d_this` is the stored central-difference derivative of the owning cell;
/// pass its negation when the face lies on the cell's left.
#[inline]
pub fn reconstruct_with_limiter(u_this: f64, u_other: f64, d_this: f64, dx: f64) -> f64 {
    u_this + 0.5 * minmod(d_this * dx, u_other - u_this)
}

#[inline]
fn pressure(u: [f64; 3], gamma: f64) -> f64 {
    (gamma - 1.0) * (u[2] - u[1] * u[1] / (2.0 * u[0]))
}

#[inline]
fn physical_flux(u: [f64; 3], p: f64) -> [f64; 3] {
    let vel = u[1] / u[0];
    [u[1], u[1] * vel + p, (u[2] + p) * vel]
}

/// Interface flux between cell `a` (left) and cell `b` (right).
#[inline]
fn face_flux(
    ua: [f64; 3],
    da: [f64; 3],
    ub: [f64; 3],
    db: [f64; 3],
    dx: f64,
    gamma: f64,
) -> Result<[f64; 3], StepFault> {
    let mut minus = [0.0; 3];
    let mut plus = [0.0; 3];
    for c in 0..3 {
        minus[c] = reconstruct_with_limiter(ua[c], ub[c], da[c], dx);
        plus[c] = reconstruct_with_limiter(ub[c], ua[c], -db[c], dx);
    }
    if !(minus[0] > 0.0 && plus[0] > 0.0) {
        return Err(StepFault("negative density"));
    }
    let p_minus = pressure(minus, gamma);
    let p_plus = pressure(plus, gamma);
    if !(p_minus > 0.0 && p_plus > 0.0) {
        return Err(StepFault("negative pressure"));
    }

    // Roe average
    let (sl, sr) = (minus[0].sqrt(), plus[0].sqrt());
    let vel_l = minus[1] / minus[0];
    let vel_r = plus[1] / plus[0];
    let h_l = (minus[2] + p_minus) / minus[0];
    let h_r = (plus[2] + p_plus) / plus[0];
    let vel = (sl * vel_l + sr * vel_r) / (sl + sr);
    let enthalpy = (sl * h_l + sr * h_r) / (sl + sr);
    let c2 = (gamma - 1.0) * (enthalpy - 0.5 * vel * vel);
    if c2.is_nan() || c2 <= 0.0 {
        return Err(StepFault("imaginary Roe sound speed"));
    }
    let radius = vel.abs() + c2.sqrt();

    let f_minus = physical_flux(minus, p_minus);
    let f_plus = physical_flux(plus, p_plus);
    let mut flux = [0.0; 3];
    for c in 0..3 {
        flux[c] = 0.5 * (f_minus[c] + f_plus[c]) - 0.5 * radius * (plus[c] - minus[c]);
    }
    Ok(flux)
}

#[inline]
fn block(v: &[f64], at: usize) -> [f64; 3] {
    [v[at], v[at + 1], v[at + 2]]
}

/// Initial conditions for Euler runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EulerInitial {
    /// Shock tube on `[0, 1)`: `rho=0.125, u=0, p=0.1` left of 0.5,
    /// `rho=1, u=0, p=1` right of it. Periodic, so the wrap is a second
    /// discontinuity.
    Sod,
    /// The shock tube on `[0, 1)` followed by its mirror image on `[1, 2)`.
    /// The mirror planes at 0 and 1 act as reflecting walls, so each half
    /// evolves exactly like an isolated tube until waves reach the walls.
    SodMirror,
    Uniform { rho: f64, velocity: f64, pressure: f64 },
}

impl EulerInitial {
    pub fn domain_length(&self) -> f64 {
        match self {
            EulerInitial::SodMirror => 2.0,
            _ => 1.0,
        }
    }

    pub fn state_at(&self, x: f64, gamma: f64) -> EulerState {
        match *self {
            EulerInitial::Sod => sod_tube(x, gamma),
            EulerInitial::SodMirror => {
                if x < 1.0 {
                    sod_tube(x, gamma)
                } else {
                    sod_tube(2.0 - x, gamma).mirrored()
                }
            }
            EulerInitial::Uniform {
                rho,
                velocity,
                pressure,
            } => EulerState::from_primitive(rho, velocity, pressure, gamma),
        }
    }
}

/// Left and right states of the shock tube.
pub fn sod_states(gamma: f64) -> (EulerState, EulerState) {
    (
        EulerState::from_primitive(0.125, 0.0, 0.1, gamma),
        EulerState::from_primitive(1.0, 0.0, 1.0, gamma),
    )
}

fn sod_tube(x: f64, gamma: f64) -> EulerState {
    let (left, right) = sod_states(gamma);
    if x < 0.5 {
        left
    } else {
        right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EulerConfigError {
    #[error("need at least 3 cells, got {0}")]
    TooFewCells(usize),
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
    #[error("initial condition is unphysical")]
    Unphysical,
}

#[derive(Debug, Clone)]
pub struct EulerKernel {
    sig: SchemeSignature,
    gamma: f64,
    dx: f64,
    dt: f64,
    initial: EulerInitial,
}

impl EulerKernel {
    /// Kernel with explicitly frozen `dx` and `dt`.
    pub fn new(gamma: f64, dx: f64, dt: f64, initial: EulerInitial) -> Self {
        Self {
            sig: SchemeSignature::new(&[(3, 6), (6, 6), (6, 9), (9, 3)]).expect("valid signature"),
            gamma,
            dx,
            dt,
            initial,
        }
    }

    /// Kernel on `cells` cells whose dt is frozen from the initial-condition
    /// CFL number (default 0.4) unless overridden.
    pub fn for_initial(
        initial: EulerInitial,
        cells: usize,
        dt: Option<f64>,
    ) -> Result<Self, EulerConfigError> {
        if cells < 3 {
            return Err(EulerConfigError::TooFewCells(cells));
        }
        let gamma = DEFAULT_GAMMA;
        let dx = initial.domain_length() / cells as f64;
        let dt = match dt {
            Some(dt) => dt,
            None => {
                let mut speed: f64 = 0.0;
                for i in 0..cells {
                    let s = initial.state_at((i as f64 + 0.5) * dx, gamma);
                    if !s.is_physical() {
                        return Err(EulerConfigError::Unphysical);
                    }
                    speed = speed.max(s.velocity().abs() + s.sound_speed());
                }
                DEFAULT_CFL * dx / speed
            }
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(EulerConfigError::BadDt(dt));
        }
        Ok(Self::new(gamma, dx, dt, initial))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> EulerInitial {
        self.initial
    }

    /// Cell-center coordinate of cell `index`.
    pub fn center(&self, index: usize) -> f64 {
        (index as f64 + 0.5) * self.dx
    }

    /// Conservative update of the block at `state_at` using the reconstruction
    /// data in the block at `stage_at`.
    #[inline]
    fn update(
        &self,
        view: &StencilView<'_>,
        base: [f64; 3],
        stage_at: usize,
        deriv_at: usize,
        factor: f64,
    ) -> Result<[f64; 3], StepFault> {
        let (l, c, r) = (view.left, view.center, view.right);
        let flux_left = face_flux(
            block(l, stage_at),
            block(l, deriv_at),
            block(c, stage_at),
            block(c, deriv_at),
            view.dx,
            self.gamma,
        )?;
        let flux_right = face_flux(
            block(c, stage_at),
            block(c, deriv_at),
            block(r, stage_at),
            block(r, deriv_at),
            view.dx,
            self.gamma,
        )?;
        let ratio = factor * view.dt / view.dx;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = base[k] - ratio * (flux_right[k] - flux_left[k]);
        }
        Ok(out)
    }
}

/// Kernel with the shock-tube initial condition and explicit `dx`, `dt`.
pub fn euler_kernel(gamma: f64, dx: f64, dt: f64) -> EulerKernel {
    EulerKernel::new(gamma, dx, dt, EulerInitial::Sod)
}

impl Kernel for EulerKernel {
    fn name(&self) -> &str {
        "euler"
    }

    fn signature(&self) -> &SchemeSignature {
        &self.sig
    }

    fn dx(&self) -> f64 {
        self.dx
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn init(&self, index: usize, _x: f64, out: &mut [f64]) {
        let s = self.initial.state_at(self.center(index), self.gamma);
        out.copy_from_slice(&s.conserved());
    }

    fn timestep(
        &self,
        substep: usize,
        view: &StencilView<'_>,
        out: &mut [f64],
    ) -> Result<(), StepFault> {
        let (l, c, r) = (view.left, view.center, view.right);
        match substep {
            0 | 2 => {
                // forward everything, append the derivative of the newest block
                let width = c.len();
                let newest = width - 3;
                out[..width].copy_from_slice(c);
                for k in 0..3 {
                    out[width + k] = (r[newest + k] - l[newest + k]) / (2.0 * view.dx);
                }
            }
            1 => {
                let u0 = block(c, 0);
                let half = self.update(view, u0, 0, 3, 0.5)?;
                out[..3].copy_from_slice(&u0);
                out[3..6].copy_from_slice(&half);
            }
            _ => {
                let next = self.update(view, block(c, 0), 3, 6, 1.0)?;
                out.copy_from_slice(&next);
            }
        }
        Ok(())
    }
}
