//! K-S kernel against a pseudo-spectral integrator and the linear dispersion
//! relation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use swept_core::engines::{run_serial, run_serial_history};
use swept_core::schemes::{KsInitial, KsKernel, KsParams};
use swept_core::substep::Kernel;

/// Fourier pseudo-spectral K-S with the same explicit midpoint rule and
/// 2/3-rule dealiasing.
struct Spectral {
    n: usize,
    wavenumbers: Vec<f64>,
    keep: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        let cutoff = n as f64 / 3.0;
        let keep = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { n as f64 - j as f64 };
                m < cutoff
            })
            .collect();
        Self {
            n,
            wavenumbers,
            keep,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn to_physical(&self, spec: &[Complex<f64>]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re / self.n as f64).collect()
    }

    fn to_spectral(&self, u: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        for (c, &k) in buf.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex::new(0.0, 0.0);
            }
        }
        buf
    }

    /// `-(u u_x + u_xx + u_xxxx)` in spectral space.
    fn rhs(&self, u_hat: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let u = self.to_physical(u_hat);
        let ux_hat: Vec<Complex<f64>> = u_hat
            .iter()
            .zip(&self.wavenumbers)
            .map(|(c, &k)| c * Complex::new(0.0, k))
            .collect();
        let ux = self.to_physical(&ux_hat);
        let product: Vec<f64> = u.iter().zip(&ux).map(|(a, b)| a * b).collect();
        let nonlinear = self.to_spectral(&product);
        u_hat
            .iter()
            .zip(&nonlinear)
            .zip(&self.wavenumbers)
            .map(|((c, nl), &k)| {
                let linear = k * k - k.powi(4);
                -nl + c * linear
            })
            .collect()
    }

    fn integrate(&self, u0: &[f64], dt: f64, steps: usize) -> Vec<f64> {
        let mut u_hat = self.to_spectral(u0);
        for _ in 0..steps {
            let k1 = self.rhs(&u_hat);
            let half: Vec<Complex<f64>> = u_hat
                .iter()
                .zip(&k1)
                .map(|(u, k)| u + k * (0.5 * dt))
                .collect();
            let k2 = self.rhs(&half);
            for (u, k) in u_hat.iter_mut().zip(&k2) {
                *u += k * dt;
            }
        }
        self.to_physical(&u_hat)
    }
}

fn ks_with_dt(points: usize, end: f64, initial: KsInitial) -> (KsKernel, usize) {
    let rough = KsParams::with_domain(1, points, None).unwrap();
    let steps = (end / rough.dt).ceil() as usize;
    let params = KsParams::with_domain(1, points, Some(end / steps as f64)).unwrap();
    (KsKernel::with_initial(params, initial), steps)
}

#[test]
fn cosine_ic_matches_spectral_at_t1() {
    let n = 128;
    let (kernel, steps) = ks_with_dt(n, 1.0, KsInitial::Cosine);
    let fd = run_serial(&kernel, n, 4 * steps as u64).unwrap();

    let u0: Vec<f64> = (0..n)
        .map(|i| 2.0 * (19.0 * i as f64 * kernel.dx() / 128.0).cos())
        .collect();
    let spectral = Spectral::new(n, kernel.params().length());
    let reference = spectral.integrate(&u0, kernel.dt(), steps);

    let err = fd
        .values
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let moved = u0
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(moved > 1e-2, "oracle barely evolved ({moved})");
    assert!(err < 1e-3, "L-inf distance to spectral oracle {err}");
}

#[test]
fn small_mode_grows_at_linear_rate() {
    let n = 128;
    let length = KsParams::with_domain(1, n, None).unwrap().length();
    for j in [3, 4, 5] {
        let q = 2.0 * PI * j as f64 / length;
        let initial = KsInitial::Mode {
            amplitude: 1e-6,
            wavenumber: q,
        };
        let end = 5.0;
        let (kernel, steps) = ks_with_dt(n, end, initial);
        let every = 4 * (steps as u64 / 5);
        let history = run_serial_history(&kernel, n, 4 * steps as u64, every).unwrap();

        let amplitude = |u: &[f64]| -> f64 {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in u.iter().enumerate() {
                let x = i as f64 * kernel.dx();
                c += v * (q * x).cos();
                s += v * (q * x).sin();
            }
            2.0 * (c * c + s * s).sqrt() / n as f64
        };
        let first = &history[0];
        let last = history.last().unwrap();
        let elapsed = (last.level - first.level) as f64 / 4.0 * kernel.dt();
        let rate = (amplitude(&last.values) / amplitude(&first.values)).ln() / elapsed;
        let expected = q * q - q.powi(4);
        assert!(
            ((rate - expected) / expected).abs() < 0.05,
            "q={q}: measured {rate}, linear theory {expected}"
        );
    }
}

#[test]
fn zero_stays_zero() {
    let (kernel, _) = ks_with_dt(32, 1.0, KsInitial::Constant(0.0));
    let f = run_serial(&kernel, 32, 400).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn coarse_catalog_grids_stay_bounded() {
    for points in [8, 16, 32, 48] {
        let kernel = swept_core::schemes::build("ks", points, None).unwrap();
        let field = swept_core::engines::run_serial(kernel.as_ref(), points, 40_000).unwrap();
        let peak = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 10.0, "{points} points: |u| reached {peak}");
    }
}
