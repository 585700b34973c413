use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LocalProblem, ProblemInstance};
use crate::error::{invalid, Result};

/// Parameters of a random instance. `box_range = None` gives unbounded boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: usize,
    /// Every eigenvalue of `A_i` is drawn uniformly from this range.
    pub theta_range: (f64, f64),
    /// Box half-widths: `p = −U(range)`, `q = U(range)` per coordinate.
    pub box_range: Option<(f64, f64)>,
    pub b_range: (f64, f64),
    pub l1_weight: f64,
    pub seed: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            n: 50,
            d: 5,
            theta_range: (2.0, 3.0),
            box_range: Some((0.5, 1.5)),
            b_range: (-5.0, 5.0),
            l1_weight: 1.0 / 50.0,
            seed: 0,
        }
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.theta_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid(format!("theta_range must satisfy 0 < lo < hi, got ({lo}, {hi})")));
        }
        if let Some((a, b)) = self.box_range {
            if !(a > 0.0 && a <= b && b.is_finite()) {
                return Err(invalid(format!("box_range must satisfy 0 < lo <= hi, got ({a}, {b})")));
            }
        }
        let (a, b) = self.b_range;
        if !(a <= b && a.is_finite() && b.is_finite()) {
            return Err(invalid(format!("b_range must be a finite interval, got ({a}, {b})")));
        }
        if !(self.l1_weight >= 0.0 && self.l1_weight.is_finite()) {
            return Err(invalid(format!("l1_weight must be nonnegative, got {}", self.l1_weight)));
        }
        if self.n < 2 || self.d == 0 {
            return Err(invalid(format!("need n >= 2 and d >= 1, got n = {}, d = {}", self.n, self.d)));
        }
        Ok(())
    }
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    // sign fix makes Q Haar distributed
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// `A_i = Q diag(λ) Qᵀ` with Haar-random `Q` and `λ ~ U(theta_range)`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let mut locals = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let q = random_orthogonal(d, &mut rng);
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
            uniform(&mut rng, spec.theta_range)
        }));
        let a = &q * lambda * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b: Vec<f64> = (0..d).map(|_| uniform(&mut rng, spec.b_range)).collect();
        let (lower, upper) = match spec.box_range {
            Some(r) => (
                (0..d).map(|_| -uniform(&mut rng, r)).collect(),
                (0..d).map(|_| uniform(&mut rng, r)).collect(),
            ),
            None => (vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d]),
        };
        locals.push(LocalProblem::new(a, b, spec.l1_weight, lower, upper)?);
    }
    ProblemInstance::new(locals)
}
