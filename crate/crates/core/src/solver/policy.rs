//! Step sizes `α^k ∈ [α_lo, α_hi] ⊂ (0, 2/δ)` where `δ` satisfies
//! `H_{G^k} ⪯ δ Λ_L^{-1}` for every weight matrix used.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian_weights, max_degree, spectral_radius, GraphSequence, GraphSnapshot, WeightKind};
use crate::oracle::ProblemInstance;

/// How `δ` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// `L · sup_k λ_1(H_k)` over the materialized snapshots.
    Spectral,
    /// `L · h̄ · n`, valid for any topology.
    ConservativeLhn,
    /// Laplacian weights: `min(L sup λ_1(L_G), 2 sup_k max_i |N_i^k| L_i)`.
    LaplacianDegree,
    /// Metropolis weights: `δ = 2`.
    MetropolisTwo,
    /// Supplied by the caller; still checked against every snapshot.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant(f64),
    /// `α^k = steps[k mod len]`.
    Sequence(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizePolicy {
    delta: f64,
    rule: DeltaRule,
    lower: f64,
    upper: f64,
    schedule: Schedule,
    enforce: bool,
}

impl StepSizePolicy {
    fn build(schedule: Schedule, delta: f64, rule: DeltaRule, enforce: bool) -> Result<Self> {
        let steps: &[f64] = match &schedule {
            Schedule::Constant(a) => std::slice::from_ref(a),
            Schedule::Sequence(v) if v.is_empty() => {
                return Err(Error::InvalidConfig("step sequence is empty".into()))
            }
            Schedule::Sequence(v) => v,
        };
        let lower = steps.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = steps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
        }
        if !(lower > 0.0 && upper.is_finite()) {
            return Err(Error::InvalidConfig(format!("step sizes must be positive, got minimum {lower}")));
        }
        let policy = Self { delta, rule, lower, upper, schedule, enforce };
        if enforce && upper >= 2.0 / delta {
            return Err(Error::InvalidConfig(format!(
                "step {upper} violates alpha < 2/delta = {}",
                2.0 / delta
            )));
        }
        Ok(policy)
    }

    /// Constant `α` checked against `α < 2/δ`.
    pub fn constant(alpha: f64, delta: f64, rule: DeltaRule) -> Result<Self> {
        Self::build(Schedule::Constant(alpha), delta, rule, true)
    }

    /// Explicit per-step sizes; the interval is their min and max.
    pub fn sequence(steps: Vec<f64>, delta: f64, rule: DeltaRule) -> Result<Self> {
        Self::build(Schedule::Sequence(steps), delta, rule, true)
    }

    /// `horizon` i.i.d. uniform draws from `[lower, upper]`.
    pub fn uniform_random(
        lower: f64,
        upper: f64,
        horizon: usize,
        seed: u64,
        delta: f64,
        rule: DeltaRule,
    ) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper) {
            return Err(Error::InvalidConfig(format!("need 0 < lower <= upper, got [{lower}, {upper}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = (0..horizon.max(1))
            .map(|_| if lower == upper { lower } else { rng.random_range(lower..=upper) })
            .collect();
        Self::build(Schedule::Sequence(steps), delta, rule, true)
    }

    /// Constant step exempt from `α < 2/δ`, for empirically tuned runs.
    /// Certification refuses such policies.
    pub fn unchecked(alpha: f64, delta: f64, rule: DeltaRule) -> Result<Self> {
        Self::build(Schedule::Constant(alpha), delta, rule, false)
    }

    pub fn step_at(&self, k: usize) -> f64 {
        match &self.schedule {
            Schedule::Constant(a) => *a,
            Schedule::Sequence(v) => v[k % v.len()],
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rule(&self) -> DeltaRule {
        self.rule
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Whether the step bounds are enforced.
    pub fn is_enforced(&self) -> bool {
        self.enforce
    }

    /// `ρ = min{α_lo − α_lo²δ/2, α_hi − α_hi²δ/2}`; positive for admissible policies.
    pub fn rho(&self) -> f64 {
        let f = |a: f64| a - a * a * self.delta / 2.0;
        f(self.lower).min(f(self.upper))
    }
}

fn check_rule(rule: DeltaRule, weights: WeightKind) -> Result<()> {
    match (rule, weights) {
        (DeltaRule::MetropolisTwo, WeightKind::Laplacian) => Err(Error::InvalidConfig(
            "delta rule metropolis_two requires Metropolis weights".into(),
        )),
        (DeltaRule::LaplacianDegree, WeightKind::Metropolis) => Err(Error::InvalidConfig(
            "delta rule laplacian_degree requires Laplacian weights".into(),
        )),
        _ => Ok(()),
    }
}

/// Largest eigenvalue per distinct edge set, cached.
struct SpectralCache<'a> {
    weights: WeightKind,
    lipschitz: &'a [f64],
    cache: HashMap<&'a [(usize, usize)], f64>,
}

impl<'a> SpectralCache<'a> {
    fn top_eigenvalue(&mut self, g: &'a GraphSnapshot) -> Result<f64> {
        if let Some(&v) = self.cache.get(g.edges()) {
            return Ok(v);
        }
        let v = spectral_radius(&self.weights.build(g, self.lipschitz)?);
        self.cache.insert(g.edges(), v);
        Ok(v)
    }
}

fn used<'a>(seq: &'a GraphSequence, horizon: usize) -> &'a [GraphSnapshot] {
    &seq.snapshots()[..horizon.min(seq.len())]
}

/// Computes `δ` for `rule` over the first `horizon` snapshots.
pub fn compute_delta(
    rule: DeltaRule,
    instance: &ProblemInstance,
    seq: &GraphSequence,
    weights: WeightKind,
    horizon: usize,
) -> Result<f64> {
    check_rule(rule, weights)?;
    let lip = instance.lipschitz_vec();
    let big_l = instance.lipschitz();
    let snaps = used(seq, horizon);
    match rule {
        DeltaRule::MetropolisTwo => Ok(2.0),
        DeltaRule::ConservativeLhn => {
            let mut h_upper = 0.0f64;
            for g in snaps {
                h_upper = h_upper.max(weights.build(g, &lip)?.h_upper());
            }
            Ok(big_l * h_upper * instance.n() as f64)
        }
        DeltaRule::Spectral => {
            let mut cache = SpectralCache { weights, lipschitz: &lip, cache: HashMap::new() };
            let mut top = 0.0f64;
            for g in snaps {
                top = top.max(cache.top_eigenvalue(g)?);
            }
            Ok(big_l * top)
        }
        DeltaRule::LaplacianDegree => {
            let mut cache = SpectralCache {
                weights: WeightKind::Laplacian,
                lipschitz: &lip,
                cache: HashMap::new(),
            };
            let (mut top, mut deg) = (0.0f64, 0.0f64);
            for g in snaps {
                top = top.max(cache.top_eigenvalue(g)?);
                for i in 0..g.node_count() {
                    deg = deg.max(g.degree(i) as f64 * lip[i]);
                }
            }
            Ok((big_l * top).min(2.0 * deg))
        }
        DeltaRule::Manual => Err(Error::InvalidConfig(
            "manual delta rule needs an explicit value".into(),
        )),
    }
}

/// Summary of the `H_k ⪯ δΛ_L^{-1}` verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyCheck {
    pub snapshots_checked: usize,
    /// Snapshots that needed an eigenvalue computation (not diagonally dominant).
    pub eigen_checks: usize,
    /// Smallest `λ_min(δΛ_L^{-1} − H_k)` among eigen-checked snapshots (+∞ if none).
    pub min_eigenvalue: f64,
}

/// Validates an enforced policy against the weights it will be used with.
pub fn validate_policy(
    policy: &StepSizePolicy,
    instance: &ProblemInstance,
    seq: &GraphSequence,
    weights: WeightKind,
    horizon: usize,
) -> Result<PolicyCheck> {
    check_rule(policy.rule(), weights)?;
    if !policy.is_enforced() {
        return Err(Error::InvalidConfig("step-size policy is not enforced".into()));
    }
    if horizon > seq.len() {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} exceeds the {} available snapshots",
            seq.len()
        )));
    }
    let lip = instance.lipschitz_vec();
    let scale: Vec<f64> = lip.iter().map(|l| policy.delta() / l).collect();
    let mut seen: HashMap<&[(usize, usize)], ()> = HashMap::new();
    let mut check = PolicyCheck { snapshots_checked: 0, eigen_checks: 0, min_eigenvalue: f64::INFINITY };
    for (k, g) in used(seq, horizon).iter().enumerate() {
        check.snapshots_checked += 1;
        if seen.insert(g.edges(), ()).is_some() {
            continue;
        }
        let h = weights.build(g, &lip)?;
        if h.dominated_by(&scale) {
            continue;
        }
        check.eigen_checks += 1;
        let m = h.min_eig_below(&scale);
        check.min_eigenvalue = check.min_eigenvalue.min(m);
        if m < -1e-10 {
            return Err(Error::InvalidConfig(format!(
                "delta = {} is too small: H at step {k} exceeds delta * Lambda_L^-1 (min eigenvalue {m:e})",
                policy.delta()
            )));
        }
    }
    Ok(check)
}

/// Largest degree over the snapshots, used in reports.
pub fn max_degree_over(seq: &GraphSequence, horizon: usize) -> usize {
    used(seq, horizon).iter().map(max_degree).max().unwrap_or(0)
}

/// `λ_1(L_G) ≤ n` for every snapshot.
pub fn laplacian_spectrum_bounded(seq: &GraphSequence, horizon: usize) -> bool {
    let n = seq.node_count() as f64;
    used(seq, horizon)
        .iter()
        .all(|g| spectral_radius(&laplacian_weights(g)) <= n + 1e-9)
}
