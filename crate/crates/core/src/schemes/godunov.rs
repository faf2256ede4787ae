use crate::substep::{Kernel, SchemeSignature, StencilView, StepFault};

/// A scalar conservation law `u_t + f(u)_x = 0` with its Godunov flux.
pub trait ScalarLaw: Send + Sync {
    fn flux(&self, u: f64) -> f64;

    /// Interface flux from the exact Riemann solution at `x/t = 0`.
    fn riemann_flux(&self, left: f64, right: f64) -> f64;
}

/// `f(u) = speed * u`, solved by upwinding.
#[derive(Debug, Clone, Copy)]
pub struct LinearAdvection {
    pub speed: f64,
}

impl Default for LinearAdvection {
    fn default() -> Self {
        Self { speed: 1.0 }
    }
}

impl ScalarLaw for LinearAdvection {
    fn flux(&self, u: f64) -> f64 {
        self.speed * u
    }

    fn riemann_flux(&self, left: f64, right: f64) -> f64 {
        if self.speed >= 0.0 {
            self.speed * left
        } else {
            self.speed * right
        }
    }
}

/// Inviscid Burgers, `f(u) = u^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl ScalarLaw for Burgers {
    fn flux(&self, u: f64) -> f64 {
        0.5 * u * u
    }

    fn riemann_flux(&self, left: f64, right: f64) -> f64 {
        if left <= right {
            // rarefaction: minimum of f over [left, right]
            if left > 0.0 {
                self.flux(left)
            } else if right < 0.0 {
                self.flux(right)
            } else {
                0.0
            }
        } else {
            // shock: maximum of f over [right, left]
            self.flux(left).max(self.flux(right))
        }
    }
}

/// Godunov finite-volume update with forward Euler.
#[inline]
pub fn godunov_substep<L: ScalarLaw + ?Sized>(law: &L, view: &StencilView<'_>) -> f64 {
    let (l, c, r) = (view.left[0], view.center[0], view.right[0]);
    let flux_left = law.riemann_flux(l, c);
    let flux_right = law.riemann_flux(c, r);
    c - view.dt / view.dx * (flux_right - flux_left)
}

/// Time integration of a Godunov scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// One substep per timestep, signature `[(1, 1)]`.
    ForwardEuler,
    /// Two-stage midpoint rule, signature `[(1, 2), (2, 1)]`.
    Midpoint,
}

/// Square pulse on the unit domain.
fn pulse(x: f64) -> f64 {
    if (0.25..0.5).contains(&x) {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct GodunovKernel<L> {
    law: L,
    stepping: Stepping,
    sig: SchemeSignature,
    dx: f64,
    dt: f64,
    name: &'static str,
}

impl<L: ScalarLaw> GodunovKernel<L> {
    pub fn new(law: L, stepping: Stepping, dx: f64, dt: f64) -> Self {
        let (sig, name) = match stepping {
            Stepping::ForwardEuler => (SchemeSignature::new(&[(1, 1)]), "advection"),
            Stepping::Midpoint => (SchemeSignature::new(&[(1, 2), (2, 1)]), "advection-rk2"),
        };
        Self {
            law,
            stepping,
            sig: sig.expect("valid signature"),
            dx,
            dt,
            name,
        }
    }

    pub fn law(&self) -> &L {
        &self.law
    }
}

impl GodunovKernel<LinearAdvection> {
    /// Unit-speed advection on the unit periodic domain at CFL 0.5.
    pub fn advection(points: usize, stepping: Stepping) -> Self {
        let dx = 1.0 / points as f64;
        Self::new(LinearAdvection::default(), stepping, dx, 0.5 * dx)
    }
}

impl<L: ScalarLaw> Kernel for GodunovKernel<L> {
    fn name(&self) -> &str {
        self.name
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

    fn init(&self, _index: usize, x: f64, out: &mut [f64]) {
        out[0] = pulse(x);
    }

    fn timestep(
        &self,
        substep: usize,
        view: &StencilView<'_>,
        out: &mut [f64],
    ) -> Result<(), StepFault> {
        match (self.stepping, substep) {
            (Stepping::ForwardEuler, _) => out[0] = godunov_substep(&self.law, view),
            (Stepping::Midpoint, 0) => {
                let half = StencilView {
                    dt: 0.5 * view.dt,
                    ..*view
                };
                out[0] = view.center[0];
                out[1] = godunov_substep(&self.law, &half);
            }
            (Stepping::Midpoint, _) => {
                let flux_left = self.law.riemann_flux(view.left[1], view.center[1]);
                let flux_right = self.law.riemann_flux(view.center[1], view.right[1]);
                out[0] = view.center[0] - view.dt / view.dx * (flux_right - flux_left);
            }
        }
        Ok(())
    }
}
