//! Accelerated proximal gradient for box-constrained quadratic + ℓ1 problems
//!
//! ```text
//! minimize  xᵀQx + cᵀx + γ‖x‖₁   subject to  lo ≤ x ≤ hi
//! ```
//!
//! with `Q` symmetric positive definite. The nonsmooth part is separable, so its
//! prox is a soft-threshold followed by a clip. The smooth part is
//! `2λ_min(Q)`-strongly convex with a `2λ_max(Q)`-Lipschitz gradient, so the
//! constant-momentum scheme converges linearly without restarts.

use crate::error::{Error, Result};

pub(crate) const MAX_ITERATIONS: usize = 100_000;

/// Borrowed view of one composite problem. `quad` is row-major `d × d`.
pub(crate) struct Composite<'a> {
    pub quad: &'a [f64],
    pub linear: &'a [f64],
    pub l1: f64,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Composite<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, g) in out.iter_mut().enumerate() {
            let row = &self.quad[i * d..(i + 1) * d];
            let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            *g = 2.0 * ax + self.linear[i];
        }
    }

    /// Proximal step `prox_{t(γ‖·‖₁ + I_box)}(x − t g)` written into `out`.
    fn prox_step(&self, x: &[f64], g: &[f64], step: f64, out: &mut [f64]) {
        let thresh = step * self.l1;
        for i in 0..self.dim() {
            let v = x[i] - step * g[i];
            let shrunk = v.signum() * (v.abs() - thresh).max(0.0);
            out[i] = shrunk.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Norm of the gradient map `(x − prox(x − t∇g(x))) / t` at `x`.
    pub fn gradient_map_norm(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let step = 0.5 / self.lambda_max;
        let mut g = vec![0.0; d];
        let mut z = vec![0.0; d];
        self.gradient(x, &mut g);
        self.prox_step(x, &g, step, &mut z);
        norm_diff(x, &z) / step
    }

    /// Rounding floor of the gradient map for iterates of magnitude `scale`.
    fn noise_floor(&self, scale: f64) -> f64 {
        let c = self.linear.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        64.0 * f64::EPSILON * (2.0 * self.lambda_max * scale * self.dim() as f64 + c + self.l1)
    }

    /// Runs the accelerated iteration from `start` (projected onto the box)
    /// until the gradient map at the returned point is at most `tol`.
    pub fn minimize(&self, start: &[f64], tol: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let step = 0.5 / self.lambda_max;
        let sqrt_kappa = (self.lambda_max / self.lambda_min).sqrt();
        let momentum = (sqrt_kappa - 1.0) / (sqrt_kappa + 1.0);

        let mut x: Vec<f64> = (0..d)
            .map(|i| start[i].clamp(self.lower[i], self.upper[i]))
            .collect();
        let mut y = x.clone();
        let mut x_new = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut residual = f64::INFINITY;

        for _ in 0..MAX_ITERATIONS {
            self.gradient(&y, &mut g);
            self.prox_step(&y, &g, step, &mut x_new);

            self.gradient(&x_new, &mut g);
            self.prox_step(&x_new, &g, step, &mut z);
            residual = norm_diff(&x_new, &z) / step;
            let scale = x_new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if residual <= tol.max(self.noise_floor(scale)) {
                return Ok(x_new);
            }
            for i in 0..d {
                y[i] = x_new[i] + momentum * (x_new[i] - x[i]);
            }
            std::mem::swap(&mut x, &mut x_new);
        }
        Err(Error::OracleFailure { residual, iterations: MAX_ITERATIONS })
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}
