//! Exact solution of the 1D Euler Riemann problem for an ideal gas.
//!
//! Newton iteration on the pressure function, then sampling of the
//! self-similar wave pattern at a given `x / t`. Used as a test oracle.

use thiserror::Error;

use super::euler::EulerState;

const TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RiemannError {
    #[error("initial data generates vacuum")]
    Vacuum,
    #[error("states must be physical with equal gamma")]
    BadInput,
    #[error("pressure iteration did not converge")]
    NoConvergence,
}

/// Pressure and velocity in the star region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarState {
    pub pressure: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Primitive {
    rho: f64,
    vel: f64,
    p: f64,
    c: f64,
}

impl Primitive {
    fn of(s: &EulerState) -> Self {
        Self {
            rho: s.rho,
            vel: s.velocity(),
            p: s.pressure(),
            c: s.sound_speed(),
        }
    }
}

/// Wave function `f_K(p)` and its derivative for one side.
fn wave(p: f64, k: &Primitive, gamma: f64) -> (f64, f64) {
    if p > k.p {
        let a = 2.0 / ((gamma + 1.0) * k.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * k.p;
        let root = (a / (p + b)).sqrt();
        let f = (p - k.p) * root;
        (f, root * (1.0 - 0.5 * (p - k.p) / (b + p)))
    } else {
        let ratio = p / k.p;
        let exp = (gamma - 1.0) / (2.0 * gamma);
        let f = 2.0 * k.c / (gamma - 1.0) * (ratio.powf(exp) - 1.0);
        (f, ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (k.rho * k.c))
    }
}

fn check(left: &EulerState, right: &EulerState) -> Result<f64, RiemannError> {
    if !(left.is_physical() && right.is_physical()) || left.gamma != right.gamma {
        return Err(RiemannError::BadInput);
    }
    Ok(left.gamma)
}

pub fn star_state(left: &EulerState, right: &EulerState) -> Result<StarState, RiemannError> {
    let gamma = check(left, right)?;
    let (l, r) = (Primitive::of(left), Primitive::of(right));
    let du = r.vel - l.vel;
    if 2.0 * (l.c + r.c) / (gamma - 1.0) <= du {
        return Err(RiemannError::Vacuum);
    }

    // two-rarefaction guess, always positive
    let exp = (gamma - 1.0) / (2.0 * gamma);
    let guess = ((l.c + r.c - 0.5 * (gamma - 1.0) * du)
        / (l.c / l.p.powf(exp) + r.c / r.p.powf(exp)))
    .powf(1.0 / exp);
    let mut p = guess.max(TOLERANCE);
    for _ in 0..MAX_ITERATIONS {
        let (fl, dl) = wave(p, &l, gamma);
        let (fr, dr) = wave(p, &r, gamma);
        let next = (p - (fl + fr + du) / (dl + dr)).max(TOLERANCE);
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < TOLERANCE {
            let (fl, _) = wave(p, &l, gamma);
            let (fr, _) = wave(p, &r, gamma);
            return Ok(StarState {
                pressure: p,
                velocity: 0.5 * (l.vel + r.vel) + 0.5 * (fr - fl),
            });
        }
    }
    Err(RiemannError::NoConvergence)
}

/// State at similarity coordinate `xi = x / t`.
pub fn exact_riemann(
    left: &EulerState,
    right: &EulerState,
    xi: f64,
) -> Result<EulerState, RiemannError> {
    let gamma = left.gamma;
    let star = star_state(left, right)?;
    let (l, r) = (Primitive::of(left), Primitive::of(right));
    let g1 = (gamma - 1.0) / (gamma + 1.0);
    let (rho, vel, p) = if xi <= star.velocity {
        sample_side(&l, star, xi, gamma, g1, 1.0)
    } else {
        sample_side(&r, star, xi, gamma, g1, -1.0)
    };
    Ok(EulerState::from_primitive(rho, vel, p, gamma))
}

/// Samples the wave on one side. `sign` is +1 for the left wave, -1 for the
/// right one; the formulas are the left-side ones with velocities mirrored.
fn sample_side(
    k: &Primitive,
    star: StarState,
    xi: f64,
    gamma: f64,
    g1: f64,
    sign: f64,
) -> (f64, f64, f64) {
    // mirror into left-wave coordinates
    let vel = sign * k.vel;
    let star_vel = sign * star.velocity;
    let xi = sign * xi;
    let ratio = star.pressure / k.p;

    let (rho, v, p) = if star.pressure > k.p {
        let shock = vel - k.c * ((gamma + 1.0) / (2.0 * gamma) * ratio + (gamma - 1.0) / (2.0 * gamma)).sqrt();
        if xi <= shock {
            (k.rho, vel, k.p)
        } else {
            (k.rho * (ratio + g1) / (g1 * ratio + 1.0), star_vel, star.pressure)
        }
    } else {
        let head = vel - k.c;
        let c_star = k.c * ratio.powf((gamma - 1.0) / (2.0 * gamma));
        let tail = star_vel - c_star;
        if xi <= head {
            (k.rho, vel, k.p)
        } else if xi >= tail {
            (k.rho * ratio.powf(1.0 / gamma), star_vel, star.pressure)
        } else {
            let c = 2.0 / (gamma + 1.0) * (k.c + 0.5 * (gamma - 1.0) * (vel - xi));
            let v = 2.0 / (gamma + 1.0) * (k.c + 0.5 * (gamma - 1.0) * vel + xi);
            let rho = k.rho * (c / k.c).powf(2.0 / (gamma - 1.0));
            (rho, v, k.p * (c / k.c).powf(2.0 * gamma / (gamma - 1.0)))
        }
    };
    (rho, sign * v, p)
}
