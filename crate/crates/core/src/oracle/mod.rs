//! Local objectives and the per-agent Fenchel conjugate oracle.
//!
//! Each agent owns `f_i(x) = xᵀA_i x + b_iᵀx + γ_i‖x‖₁` restricted to a box
//! `[p_i, q_i]` containing the origin in its interior. The oracle evaluates the
//! constrained argmax `x̃_i(w) = argmax_{x ∈ X_i} wᵀx − f_i(x)`, which is also the
//! gradient of the conjugate `d_i`.

mod generate;
mod prox;

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use generate::{generate_instance, InstanceSpec};
pub(crate) use prox::Composite;

use crate::error::{invalid, Error, Result};

/// Default gradient-map tolerance for conjugate evaluations.
pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;

/// One agent's objective and box.
///
/// The convexity modulus is taken as `θ_i = λ_min(A_i)` and the conjugate
/// gradient's Lipschitz constant as `L_i = 1/θ_i`. The Hessian of `xᵀA_i x` is
/// `2A_i`, so both are conservative by a factor of two.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LocalProblemFile", into = "LocalProblemFile")]
pub struct LocalProblem {
    dim: usize,
    quad: Vec<f64>,
    linear: Vec<f64>,
    l1_weight: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    theta: f64,
    lambda_max: f64,
    chol: Cholesky<f64, Dyn>,
}

/// On-disk layout of a [`LocalProblem`]; matrices are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LocalProblemFile {
    quad: Vec<Vec<f64>>,
    linear: Vec<f64>,
    l1_weight: f64,
    box_lower: Vec<f64>,
    box_upper: Vec<f64>,
}

impl TryFrom<LocalProblemFile> for LocalProblem {
    type Error = Error;

    fn try_from(f: LocalProblemFile) -> Result<Self> {
        let d = f.quad.len();
        if f.quad.iter().any(|r| r.len() != d) {
            return Err(invalid("quadratic term must be a square matrix"));
        }
        let quad = DMatrix::from_row_iterator(d, d, f.quad.into_iter().flatten());
        LocalProblem::new(quad, f.linear, f.l1_weight, f.box_lower, f.box_upper)
    }
}

impl From<LocalProblem> for LocalProblemFile {
    fn from(p: LocalProblem) -> Self {
        LocalProblemFile {
            quad: p.quad.chunks(p.dim).map(<[f64]>::to_vec).collect(),
            linear: p.linear,
            l1_weight: p.l1_weight,
            box_lower: p.lower,
            box_upper: p.upper,
        }
    }
}

impl LocalProblem {
    pub fn new(
        quad: DMatrix<f64>,
        linear: Vec<f64>,
        l1_weight: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let d = quad.nrows();
        if d == 0 || quad.ncols() != d {
            return Err(invalid("quadratic term must be a nonempty square matrix"));
        }
        for (name, v) in [("linear", &linear), ("box_lower", &lower), ("box_upper", &upper)] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            if name == "linear" && v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("linear term must be finite"));
            }
        }
        if quad.iter().any(|x| !x.is_finite()) {
            return Err(invalid("quadratic term must be finite"));
        }
        let asym = (&quad - quad.transpose()).amax();
        if asym > 1e-12 * quad.amax().max(1.0) {
            return Err(invalid(format!("quadratic term is not symmetric (max asymmetry {asym:e})")));
        }
        if !(l1_weight >= 0.0 && l1_weight.is_finite()) {
            return Err(invalid(format!("l1 weight must be finite and nonnegative, got {l1_weight}")));
        }
        for i in 0..d {
            if !(lower[i] < 0.0 && upper[i] > 0.0) {
                return Err(invalid(format!(
                    "box must contain the origin in its interior (coordinate {}: [{}, {}])",
                    i + 1,
                    lower[i],
                    upper[i]
                )));
            }
        }
        let quad = (&quad + quad.transpose()) * 0.5;
        let eig = SymmetricEigen::new(quad.clone());
        let theta = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if !(theta > 0.0) {
            return Err(invalid(format!(
                "quadratic term must be positive definite (min eigenvalue {theta:e})"
            )));
        }
        let chol = Cholesky::new(quad.clone())
            .ok_or_else(|| invalid("quadratic term failed Cholesky factorization"))?;
        Ok(Self {
            dim: d,
            quad: quad.transpose().iter().copied().collect(),
            linear,
            l1_weight,
            lower,
            upper,
            theta,
            lambda_max,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `A_i`.
    pub fn quad(&self) -> &[f64] {
        &self.quad
    }

    pub fn quad_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.quad)
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn l1_weight(&self) -> f64 {
        self.l1_weight
    }

    pub fn box_lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn box_upper(&self) -> &[f64] {
        &self.upper
    }

    /// Convexity parameter `θ_i = λ_min(A_i)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Lipschitz constant `L_i = 1/θ_i` of the conjugate gradient.
    pub fn lipschitz(&self) -> f64 {
        1.0 / self.theta
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// True when every box bound is infinite.
    pub fn is_unconstrained(&self) -> bool {
        self.lower.iter().all(|v| v.is_infinite()) && self.upper.iter().all(|v| v.is_infinite())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// `f_i(x)`, defined on all of `R^d` (the box is not enforced here).
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.quad[i * d..(i + 1) * d];
            quad += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        let lin: f64 = self.linear.iter().zip(x).map(|(b, v)| b * v).sum();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        quad + lin + self.l1_weight * l1
    }

    /// Gradient `2A_i x + b_i` of the smooth part.
    pub fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.quad[i * d..(i + 1) * d];
            out[i] = 2.0 * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.linear[i];
        }
    }

    /// `x̃_i(w)`, started from the origin.
    pub fn conjugate_argmax(&self, w: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.conjugate_argmax_from(w, tol, &vec![0.0; self.dim])
    }

    /// `x̃_i(w)` with a warm start (typically the previous iterate).
    pub fn conjugate_argmax_from(&self, w: &[f64], tol: f64, start: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: w.len() });
        }
        if start.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: start.len() });
        }
        if !(tol > 0.0) {
            return Err(invalid(format!("oracle tolerance must be positive, got {tol}")));
        }
        let shifted: Vec<f64> = self.linear.iter().zip(w).map(|(b, w)| b - w).collect();
        if self.l1_weight == 0.0 {
            // stationary point of wᵀx − xᵀAx − bᵀx: 2Ax = w − b
            let rhs = DVector::from_iterator(self.dim, shifted.iter().map(|v| -0.5 * v));
            let x = self.chol.solve(&rhs);
            if self.contains(x.as_slice()) {
                return Ok(x.as_slice().to_vec());
            }
        }
        self.composite(&shifted).minimize(start, tol)
    }

    /// `d_i(w) = wᵀx̃ − f_i(x̃)`.
    pub fn conjugate_value(&self, w: &[f64], tol: f64) -> Result<f64> {
        let x = self.conjugate_argmax(w, tol)?;
        Ok(self.conjugate_value_at(w, &x))
    }

    /// `wᵀx − f_i(x)` for an already computed argmax `x`.
    pub fn conjugate_value_at(&self, w: &[f64], x: &[f64]) -> f64 {
        w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.objective_value(x)
    }

    pub(crate) fn composite<'a>(&'a self, linear: &'a [f64]) -> Composite<'a> {
        Composite {
            quad: &self.quad,
            linear,
            l1: self.l1_weight,
            lower: &self.lower,
            upper: &self.upper,
            lambda_min: self.theta,
            lambda_max: self.lambda_max,
        }
    }
}

/// The `n` local problems of one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct ProblemInstance {
    locals: Vec<LocalProblem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    d: usize,
    locals: Vec<LocalProblem>,
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        if f.locals.len() != f.n {
            return Err(invalid(format!("header says n = {} but {} local problems follow", f.n, f.locals.len())));
        }
        let inst = ProblemInstance::new(f.locals)?;
        if inst.dim() != f.d {
            return Err(Error::DimensionMismatch { expected: f.d, found: inst.dim() });
        }
        Ok(inst)
    }
}

impl From<ProblemInstance> for InstanceFile {
    fn from(p: ProblemInstance) -> Self {
        InstanceFile { n: p.n(), d: p.dim(), locals: p.locals }
    }
}

impl ProblemInstance {
    pub fn new(locals: Vec<LocalProblem>) -> Result<Self> {
        if locals.len() < 2 {
            return Err(invalid(format!("need at least 2 agents, got {}", locals.len())));
        }
        let d = locals[0].dim();
        if let Some(p) = locals.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Self { locals })
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    pub fn locals(&self) -> &[LocalProblem] {
        &self.locals
    }

    pub fn local(&self, i: usize) -> &LocalProblem {
        &self.locals[i]
    }

    /// `θ_min = min_i θ_i`.
    pub fn theta_min(&self) -> f64 {
        self.locals.iter().map(LocalProblem::theta).fold(f64::INFINITY, f64::min)
    }

    /// `L = 1/θ_min = max_i L_i`.
    pub fn lipschitz(&self) -> f64 {
        1.0 / self.theta_min()
    }

    /// Per-agent `L_i`, the diagonal of `Λ_L`.
    pub fn lipschitz_vec(&self) -> Vec<f64> {
        self.locals.iter().map(LocalProblem::lipschitz).collect()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.locals.iter().all(LocalProblem::is_unconstrained)
    }

    pub fn has_l1(&self) -> bool {
        self.locals.iter().any(|p| p.l1_weight() > 0.0)
    }

    /// Intersection of the local boxes.
    pub fn common_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        for p in &self.locals {
            for c in 0..d {
                lo[c] = lo[c].max(p.box_lower()[c]);
                hi[c] = hi[c].min(p.box_upper()[c]);
            }
        }
        (lo, hi)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance serializes to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("instance file: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
