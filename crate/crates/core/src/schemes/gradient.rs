use crate::substep::{Kernel, SchemeSignature, StencilView, StepFault};

/// Forwards the center value and its central-difference derivative.
///
/// Returns `(center, (right - left) / (2 dx))`.
#[inline]
pub fn gradient_substep(view: &StencilView<'_>) -> (f64, f64) {
    let u = view.center[0];
    (u, (view.right[0] - view.left[0]) / (2.0 * view.dx))
}

/// Diffusion `u_t = kappa u_xx` built from two chained gradient substeps.
///
/// Substep 0 forwards `u` and stores `u_x`; substep 1 differentiates the
/// stored gradient again and applies a forward-Euler update. The resulting
/// Laplacian is the wide `(u[i+2] - 2u[i] + u[i-2]) / 4dx^2` one, obtained
/// with only immediate-neighbour reads.
#[derive(Debug, Clone)]
pub struct GradientChain {
    sig: SchemeSignature,
    kappa: f64,
    dx: f64,
    dt: f64,
}

impl GradientChain {
    pub fn new(kappa: f64, dx: f64, dt: f64) -> Self {
        Self {
            sig: SchemeSignature::new(&[(1, 2), (2, 1)]).expect("valid signature"),
            kappa,
            dx,
            dt,
        }
    }

    /// Unit-length periodic domain of `points` cells, stable default dt.
    pub fn on_unit_domain(points: usize) -> Self {
        let dx = 1.0 / points as f64;
        Self::new(1.0, dx, 0.4 * dx * dx)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Kernel for GradientChain {
    fn name(&self) -> &str {
        "gradient-chain"
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
        let two_pi = 2.0 * std::f64::consts::PI;
        out[0] = (two_pi * x).sin() + 0.5 * (3.0 * two_pi * x).cos();
    }

    fn timestep(
        &self,
        substep: usize,
        view: &StencilView<'_>,
        out: &mut [f64],
    ) -> Result<(), StepFault> {
        if substep == 0 {
            let (u, ux) = gradient_substep(view);
            out[0] = u;
            out[1] = ux;
        } else {
            let uxx = (view.right[1] - view.left[1]) / (2.0 * view.dx);
            out[0] = view.center[0] + self.kappa * view.dt * uxx;
        }
        Ok(())
    }
}
