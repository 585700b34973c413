//! Scenario configuration files, the built-in presets, and the driver that
//! runs every algorithm of a scenario and writes its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineConfig, BaselineKind, BaselineStep};
use crate::certify::{
    certify_run_with_estimate, estimate_dual_optimum, solve_centralized_with_target, CertificationReport,
    CENTRALIZED_TOL,
};
use crate::block::NodeBlock;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{generate_sequence, io, verify_b_connectivity, GraphSequence, SequenceKind, WeightKind};
use crate::oracle::{generate_instance, InstanceSpec, ProblemInstance, DEFAULT_ORACLE_TOL};
use crate::solver::{
    compute_delta, run, to_csv, DeltaRule, Init, MetricsRecord, RunConfig, StepSizePolicy,
};

/// Extra steps (as a multiple of the horizon) used to estimate `w*`.
pub const DUAL_ESTIMATE_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Master seed: the instance uses `seed`, the graph `seed + 1`, random
    /// dual initializations `seed + 2` and random step schedules `seed + 3`.
    pub seed: u64,
    pub horizon: usize,
    pub record_every: usize,
    pub certify: bool,
    pub execution: Execution,
    pub oracle_tol: f64,
    pub descent_slack: f64,
    pub instance: InstanceSource,
    pub graph: GraphSource,
    pub init: InitSpec,
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Generate {
        n: usize,
        d: usize,
        theta_range: [f64; 2],
        /// Ignored when `unbounded` is set.
        box_range: [f64; 2],
        unbounded: bool,
        b_range: [f64; 2],
        l1_weight: f64,
    },
    /// Instance file, relative to the config file's directory.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    Generate { kind: SequenceKind, window: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zeros,
    RandomSum,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Standard deviation of the random draw (`random_sum` only).
    pub scale: f64,
    /// Resource target `c = Σ_i w_i`; all zeros for the standard problem.
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Constant { value: f64 },
    /// `α = factor / δ`.
    InverseDelta { factor: f64 },
    /// `α^k` uniform in `[lower_factor / δ, upper_factor / δ]`.
    Uniform { lower_factor: f64, upper_factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStepRule {
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Fdgm {
        name: String,
        weights: WeightKind,
        delta_rule: DeltaRule,
        /// Only read for `delta_rule = "manual"`.
        delta: f64,
        step: StepSpec,
        /// Reject steps outside `(0, 2/δ)`; tuned runs may switch this off.
        enforce: bool,
    },
    Subgrad { name: String, step_rule: BaselineStepRule, step: f64 },
    Diging { name: String, step_rule: BaselineStepRule, step: f64 },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &str {
        match self {
            AlgorithmSpec::Fdgm { name, .. }
            | AlgorithmSpec::Subgrad { name, .. }
            | AlgorithmSpec::Diging { name, .. } => name,
        }
    }
}

fn cfg_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{key}: {msg}"))
}

fn check_range(key: &str, r: [f64; 2], positive: bool) -> Result<()> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && (!positive || r[0] > 0.0);
    if ok {
        Ok(())
    } else {
        Err(cfg_err(key, format!("invalid range [{}, {}]", r[0], r[1])))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Structural checks that do not need the instance or graph.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(cfg_err("horizon", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(cfg_err("record_every", "must be at least 1"));
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol.is_finite()) {
            return Err(cfg_err("oracle_tol", "must be positive"));
        }
        if !(self.descent_slack >= 0.0) {
            return Err(cfg_err("descent_slack", "must be nonnegative"));
        }
        if let InstanceSource::Generate { n, d, theta_range, box_range, unbounded, b_range, l1_weight } =
            &self.instance
        {
            if *n < 2 {
                return Err(cfg_err("instance.n", "must be at least 2"));
            }
            if *d == 0 {
                return Err(cfg_err("instance.d", "must be at least 1"));
            }
            check_range("instance.theta_range", *theta_range, true)?;
            if !unbounded {
                check_range("instance.box_range", *box_range, true)?;
            }
            check_range("instance.b_range", *b_range, false)?;
            if !(*l1_weight >= 0.0 && l1_weight.is_finite()) {
                return Err(cfg_err("instance.l1_weight", "must be finite and nonnegative"));
            }
            if self.init.target.len() != *d {
                return Err(cfg_err("init.target", format!("needs {d} entries, got {}", self.init.target.len())));
            }
        }
        if let GraphSource::Generate { kind, window } = &self.graph {
            if *window == 0 {
                return Err(cfg_err("graph.window", "must be at least 1"));
            }
            if let InstanceSource::Generate { n, .. } = &self.instance {
                if *kind == SequenceKind::Gossip && *window < n - 1 {
                    return Err(cfg_err(
                        "graph.window",
                        format!("gossip needs window >= n - 1 = {}, got {window}", n - 1),
                    ));
                }
            }
        }
        if !(self.init.scale >= 0.0 && self.init.scale.is_finite()) {
            return Err(cfg_err("init.scale", "must be finite and nonnegative"));
        }
        if self.init.target.iter().any(|v| !v.is_finite()) {
            return Err(cfg_err("init.target", "must be finite"));
        }
        if self.algorithms.is_empty() {
            return Err(cfg_err("algorithms", "at least one algorithm is required"));
        }
        let mut names = std::collections::HashSet::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            let key = |f: &str| format!("algorithms[{i}].{f}");
            let name = a.name();
            if name.is_empty()
                || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(cfg_err(&key("name"), format!("{name:?} must be nonempty [A-Za-z0-9_-]")));
            }
            if !names.insert(name) {
                return Err(cfg_err(&key("name"), format!("duplicate algorithm name {name:?}")));
            }
            match a {
                AlgorithmSpec::Fdgm { delta_rule, delta, step, weights, .. } => {
                    match (delta_rule, weights) {
                        (DeltaRule::MetropolisTwo, WeightKind::Laplacian)
                        | (DeltaRule::LaplacianDegree, WeightKind::Metropolis) => {
                            return Err(cfg_err(&key("delta_rule"), format!("{delta_rule:?} does not fit {weights:?} weights")));
                        }
                        _ => {}
                    }
                    if *delta_rule == DeltaRule::Manual && !(*delta > 0.0 && delta.is_finite()) {
                        return Err(cfg_err(&key("delta"), "manual delta must be positive"));
                    }
                    let bad = match step {
                        StepSpec::Constant { value } => !(*value > 0.0 && value.is_finite()),
                        StepSpec::InverseDelta { factor } => !(*factor > 0.0 && factor.is_finite()),
                        StepSpec::Uniform { lower_factor, upper_factor } => {
                            !(*lower_factor > 0.0 && lower_factor <= upper_factor && upper_factor.is_finite())
                        }
                    };
                    if bad {
                        return Err(cfg_err(&key("step"), "step parameters must be positive and ordered"));
                    }
                }
                AlgorithmSpec::Subgrad { step, .. } | AlgorithmSpec::Diging { step, .. } => {
                    if !(*step > 0.0 && step.is_finite()) {
                        return Err(cfg_err(&key("step"), "must be positive"));
                    }
                }
            }
        }
        Ok(())
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig1a", "box + l1 quadratic: n=50, B=10, 2<theta<3"),
    ("fig1b", "box + l1 quadratic: n=500, B=10, 2<theta<3"),
    ("fig1c", "box + l1 quadratic: n=50, B=10, 0.2<theta<0.4"),
    ("fig1d", "box + l1 quadratic: n=50, B=50, 2<theta<3"),
    ("fig1e", "box + l1 quadratic: n=500, B=50, 2<theta<3"),
    ("fig1f", "box + l1 quadratic: n=50, B=10, 5<theta<10"),
    ("fig2a", "unconstrained smooth quadratic, theoretical step sizes"),
    ("fig2b", "unconstrained smooth quadratic, empirical step sizes"),
    ("gossip-demo", "one edge per step, n=10, B=9, Laplacian and Metropolis"),
    ("resource-allocation-demo", "sum of duals fixed to c=(1,0,0), n=10, B=5"),
];

fn fdgm(name: &str, weights: WeightKind, rule: DeltaRule, step: StepSpec) -> AlgorithmSpec {
    AlgorithmSpec::Fdgm { name: name.into(), weights, delta_rule: rule, delta: 0.0, step, enforce: true }
}

fn fig1_algorithms() -> Vec<AlgorithmSpec> {
    vec![
        fdgm("fdgm_laplacian", WeightKind::Laplacian, DeltaRule::ConservativeLhn, StepSpec::InverseDelta { factor: 1.0 }),
        fdgm("fdgm_metropolis", WeightKind::Metropolis, DeltaRule::MetropolisTwo, StepSpec::Constant { value: 0.5 }),
        fdgm(
            "fdgm_laplacian_degree",
            WeightKind::Laplacian,
            DeltaRule::LaplacianDegree,
            StepSpec::InverseDelta { factor: 1.0 },
        ),
        AlgorithmSpec::Subgrad { name: "subgrad".into(), step_rule: BaselineStepRule::Diminishing, step: 1.0 },
    ]
}

fn base(name: &str, n: usize, d: usize, window: usize, theta: [f64; 2], horizon: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        seed: 0,
        horizon,
        record_every: 10,
        certify: false,
        execution: Execution::Parallel,
        oracle_tol: DEFAULT_ORACLE_TOL,
        descent_slack: 1e-8,
        instance: InstanceSource::Generate {
            n,
            d,
            theta_range: theta,
            box_range: [0.5, 1.5],
            unbounded: false,
            b_range: [-5.0, 5.0],
            l1_weight: 1.0 / n as f64,
        },
        graph: GraphSource::Generate { kind: SequenceKind::WindowedTree, window },
        init: InitSpec { kind: InitKind::Zeros, scale: 0.0, target: vec![0.0; d] },
        algorithms: fig1_algorithms(),
    }
}

fn unconstrained(cfg: &mut ScenarioConfig) {
    if let InstanceSource::Generate { unbounded, l1_weight, .. } = &mut cfg.instance {
        *unbounded = true;
        *l1_weight = 0.0;
    }
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let fig1 = |n, window, theta| base(name, n, 5, window, theta, 10_000);
    let cfg = match name {
        "fig1a" => fig1(50, 10, [2.0, 3.0]),
        "fig1b" => fig1(500, 10, [2.0, 3.0]),
        "fig1c" => fig1(50, 10, [0.2, 0.4]),
        "fig1d" => fig1(50, 50, [2.0, 3.0]),
        "fig1e" => fig1(500, 50, [2.0, 3.0]),
        "fig1f" => fig1(50, 10, [5.0, 10.0]),
        "fig2a" | "fig2b" => {
            let mut c = base(name, 50, 5, 10, [2.0, 3.0], 1_000);
            unconstrained(&mut c);
            c.record_every = 1;
            let theoretical = name == "fig2a";
            c.algorithms = vec![
                fdgm("fdgm_laplacian", WeightKind::Laplacian, DeltaRule::ConservativeLhn, StepSpec::InverseDelta { factor: 1.0 }),
                AlgorithmSpec::Fdgm {
                    name: "fdgm_metropolis".into(),
                    weights: WeightKind::Metropolis,
                    delta_rule: DeltaRule::MetropolisTwo,
                    delta: 0.0,
                    step: StepSpec::Constant { value: if theoretical { 0.5 } else { 1.7 } },
                    enforce: theoretical,
                },
                AlgorithmSpec::Diging {
                    name: "diging".into(),
                    step_rule: BaselineStepRule::Constant,
                    step: if theoretical { 0.01 } else { 0.05 },
                },
            ];
            c
        }
        "gossip-demo" => {
            let mut c = base(name, 10, 3, 9, [2.0, 3.0], 5_000);
            c.graph = GraphSource::Generate { kind: SequenceKind::Gossip, window: 9 };
            c.algorithms = vec![
                fdgm(
                    "fdgm_laplacian",
                    WeightKind::Laplacian,
                    DeltaRule::LaplacianDegree,
                    StepSpec::InverseDelta { factor: 1.0 },
                ),
                fdgm("fdgm_metropolis", WeightKind::Metropolis, DeltaRule::MetropolisTwo, StepSpec::Constant { value: 0.5 }),
            ];
            c
        }
        "resource-allocation-demo" => {
            let mut c = base(name, 10, 3, 5, [2.0, 3.0], 2_000);
            c.init = InitSpec { kind: InitKind::RandomSum, scale: 1.0, target: vec![1.0, 0.0, 0.0] };
            c.certify = true;
            c.algorithms = vec![fdgm(
                "fdgm_metropolis",
                WeightKind::Metropolis,
                DeltaRule::MetropolisTwo,
                StepSpec::Constant { value: 0.5 },
            )];
            c
        }
        _ => return None,
    };
    Some(cfg)
}

/// Instance, graph and resolved algorithms of a scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub instance: ProblemInstance,
    pub seq: GraphSequence,
    pub algorithms: Vec<Resolved>,
}

#[derive(Debug, Clone)]
pub enum ResolvedKind {
    Fdgm(RunConfig),
    Baseline(BaselineConfig),
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub kind: ResolvedKind,
}

/// Values derived during resolution, echoed next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct ResolvedEcho {
    name: String,
    weights: Option<WeightKind>,
    delta: Option<f64>,
    alpha_lower: f64,
    alpha_upper: f64,
    rho: Option<f64>,
    enforced: bool,
}

fn resolve_path(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Builds the instance and graph, checks B-connectivity and every step-size
/// policy. Relative file paths are resolved against `base_dir`.
pub fn prepare(config: &ScenarioConfig, base_dir: &Path) -> Result<Prepared> {
    config.validate()?;
    let instance = match &config.instance {
        InstanceSource::Generate { n, d, theta_range, box_range, unbounded, b_range, l1_weight } => {
            generate_instance(&InstanceSpec {
                n: *n,
                d: *d,
                theta_range: (theta_range[0], theta_range[1]),
                box_range: (!unbounded).then_some((box_range[0], box_range[1])),
                b_range: (b_range[0], b_range[1]),
                l1_weight: *l1_weight,
                seed: config.seed,
            })
            .map_err(|e| cfg_err("instance", e))?
        }
        InstanceSource::File { path } => ProblemInstance::load(resolve_path(base_dir, path))
            .map_err(|e| cfg_err("instance.path", e))?,
    };
    if config.init.target.len() != instance.dim() {
        return Err(cfg_err(
            "init.target",
            format!("needs {} entries, got {}", instance.dim(), config.init.target.len()),
        ));
    }
    let seq = match &config.graph {
        GraphSource::Generate { kind, window } => {
            // whole windows so that every step lies in a checked window
            let len = config.horizon.div_ceil(*window) * window;
            generate_sequence(*kind, instance.n(), *window, len, config.seed.wrapping_add(1))
                .map_err(|e| cfg_err("graph.window", e))?
        }
        GraphSource::File { path } => {
            let file = fs::File::open(resolve_path(base_dir, path)).map_err(|e| cfg_err("graph.path", e))?;
            io::read_sequence(std::io::BufReader::new(file)).map_err(|e| cfg_err("graph.path", e))?
        }
    };
    if seq.node_count() != instance.n() {
        return Err(cfg_err(
            "graph",
            format!("graph has {} nodes but the instance has {}", seq.node_count(), instance.n()),
        ));
    }
    if seq.len() < config.horizon {
        return Err(cfg_err("horizon", format!("exceeds the {} available graph snapshots", seq.len())));
    }
    let checked = (seq.len() / seq.window()) * seq.window();
    if checked == 0 || !verify_b_connectivity(&seq, seq.window(), checked)? {
        return Err(cfg_err("graph.window", format!("sequence is not {}-connected", seq.window())));
    }

    let mut algorithms = Vec::new();
    for (i, spec) in config.algorithms.iter().enumerate() {
        let key = |f: &str| format!("algorithms[{i}].{f}");
        let kind = match spec {
            AlgorithmSpec::Fdgm { weights, delta_rule, delta, step, enforce, .. } => {
                let delta = match delta_rule {
                    DeltaRule::Manual => *delta,
                    rule => compute_delta(*rule, &instance, &seq, *weights, config.horizon)
                        .map_err(|e| cfg_err(&key("delta_rule"), e))?,
                };
                let policy = match (step, enforce) {
                    (StepSpec::Constant { value }, true) => StepSizePolicy::constant(*value, delta, *delta_rule),
                    (StepSpec::Constant { value }, false) => StepSizePolicy::unchecked(*value, delta, *delta_rule),
                    (StepSpec::InverseDelta { factor }, true) => {
                        StepSizePolicy::constant(factor / delta, delta, *delta_rule)
                    }
                    (StepSpec::InverseDelta { factor }, false) => {
                        StepSizePolicy::unchecked(factor / delta, delta, *delta_rule)
                    }
                    (StepSpec::Uniform { lower_factor, upper_factor }, _) => StepSizePolicy::uniform_random(
                        lower_factor / delta,
                        upper_factor / delta,
                        config.horizon,
                        config.seed.wrapping_add(3),
                        delta,
                        *delta_rule,
                    ),
                }
                .map_err(|e| cfg_err(&key("step"), e))?;
                if policy.is_enforced() {
                    crate::solver::validate_policy(&policy, &instance, &seq, *weights, config.horizon)
                        .map_err(|e| cfg_err(&key("delta_rule"), e))?;
                }
                let init = match config.init.kind {
                    InitKind::Zeros => Init::Zeros,
                    InitKind::Uniform => Init::Uniform { target: config.init.target.clone() },
                    InitKind::RandomSum => Init::RandomSum {
                        seed: config.seed.wrapping_add(2),
                        scale: config.init.scale,
                        target: config.init.target.clone(),
                    },
                };
                if matches!(init, Init::Zeros) && config.init.target.iter().any(|&c| c != 0.0) {
                    return Err(cfg_err("init.target", "a nonzero target needs init.kind random_sum or uniform"));
                }
                ResolvedKind::Fdgm(RunConfig {
                    weights: *weights,
                    policy,
                    init,
                    horizon: config.horizon,
                    record_every: config.record_every,
                    oracle_tol: config.oracle_tol,
                    descent_slack: config.descent_slack,
                    execution: config.execution,
                    keep_window_duals: false,
                })
            }
            AlgorithmSpec::Subgrad { step_rule, step, .. } | AlgorithmSpec::Diging { step_rule, step, .. } => {
                let kind = if matches!(spec, AlgorithmSpec::Subgrad { .. }) {
                    BaselineKind::SubgradProjection
                } else {
                    if instance.has_l1() || !instance.is_unconstrained() {
                        return Err(cfg_err(&key("kind"), "diging needs an unconstrained instance without l1 term"));
                    }
                    BaselineKind::Diging
                };
                let step = match step_rule {
                    BaselineStepRule::Diminishing => BaselineStep::Diminishing(*step),
                    BaselineStepRule::Constant => BaselineStep::Constant(*step),
                };
                ResolvedKind::Baseline(BaselineConfig {
                    kind,
                    step,
                    horizon: config.horizon,
                    record_every: config.record_every,
                    execution: config.execution,
                })
            }
        };
        algorithms.push(Resolved { name: spec.name().to_string(), kind });
    }
    Ok(Prepared { config: config.clone(), instance, seq, algorithms })
}

impl Prepared {
    /// The config as TOML followed by the derived step-size values.
    pub fn resolved_echo(&self) -> String {
        #[derive(Serialize)]
        struct Echo<'a> {
            #[serde(flatten)]
            config: &'a ScenarioConfig,
            resolved: Vec<ResolvedEcho>,
        }
        let resolved = self
            .algorithms
            .iter()
            .map(|a| match &a.kind {
                ResolvedKind::Fdgm(c) => ResolvedEcho {
                    name: a.name.clone(),
                    weights: Some(c.weights),
                    delta: Some(c.policy.delta()),
                    alpha_lower: c.policy.lower(),
                    alpha_upper: c.policy.upper(),
                    rho: Some(c.policy.rho()),
                    enforced: c.policy.is_enforced(),
                },
                ResolvedKind::Baseline(c) => ResolvedEcho {
                    name: a.name.clone(),
                    weights: None,
                    delta: None,
                    alpha_lower: c.step.at(c.horizon.saturating_sub(1)),
                    alpha_upper: c.step.at(0),
                    rho: None,
                    enforced: false,
                },
            })
            .collect();
        toml::to_string(&Echo { config: &self.config, resolved }).expect("echo serializes to TOML")
    }
}

/// Result of one algorithm within a scenario.
#[derive(Debug)]
pub struct AlgorithmOutcome {
    pub name: String,
    pub records: Vec<MetricsRecord>,
    /// Set when the run aborted; `records` then holds the partial series.
    pub error: Option<Error>,
    pub certification: Option<std::result::Result<CertificationReport, Error>>,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub algorithms: Vec<AlgorithmOutcome>,
}

impl ScenarioOutcome {
    pub fn first_error(&self) -> Option<&Error> {
        self.algorithms.iter().find_map(|a| a.error.as_ref())
    }

    /// True unless some certification ran and failed or was unavailable.
    pub fn certification_passed(&self) -> bool {
        self.algorithms.iter().all(|a| match &a.certification {
            None => true,
            Some(Ok(r)) => r.passed(),
            Some(Err(_)) => false,
        })
    }

    pub fn report_text(&self) -> String {
        let mut out = String::new();
        for a in &self.algorithms {
            match &a.certification {
                None => {}
                Some(Ok(r)) => {
                    out.push_str(&format!("[{}]\n{r}", a.name));
                }
                Some(Err(e)) => out.push_str(&format!("[{}]\nunavailable: {e}\n", a.name)),
            }
        }
        out
    }
}

/// Runs every algorithm in order. Certification covers dual-method runs
/// with enforced step sizes; other runs are reported as not certified.
pub fn execute(prepared: &Prepared, certify: bool) -> Result<ScenarioOutcome> {
    let target = &prepared.config.init.target;
    let reference = solve_centralized_with_target(&prepared.instance, target, CENTRALIZED_TOL)?;
    let optimum = reference.optimum();
    // every algorithm starts from the same dual, so one estimate serves all
    let mut w_est: Option<NodeBlock> = None;
    let mut algorithms = Vec::new();
    for alg in &prepared.algorithms {
        let outcome = match &alg.kind {
            ResolvedKind::Fdgm(cfg) if certify && cfg.policy.is_enforced() => {
                if w_est.is_none() {
                    let steps = DUAL_ESTIMATE_FACTOR * cfg.horizon;
                    w_est = Some(estimate_dual_optimum(&prepared.instance, &prepared.seq, &cfg.init, steps, cfg.oracle_tol)?);
                }
                let w = w_est.clone().expect("estimate computed above");
                match certify_run_with_estimate(&prepared.instance, &prepared.seq, cfg, w) {
                    Ok(c) => AlgorithmOutcome {
                        name: alg.name.clone(),
                        records: c.trace.records,
                        error: None,
                        certification: Some(Ok(c.report)),
                    },
                    Err(f) if matches!(f.error, Error::CertificationUnavailable(_)) => AlgorithmOutcome {
                        name: alg.name.clone(),
                        records: f.records,
                        error: None,
                        certification: Some(Err(f.error)),
                    },
                    Err(f) => AlgorithmOutcome {
                        name: alg.name.clone(),
                        records: f.records,
                        error: Some(f.error),
                        certification: None,
                    },
                }
            }
            ResolvedKind::Fdgm(cfg) => match run(&prepared.instance, &prepared.seq, cfg, Some(&optimum)) {
                Ok(t) => AlgorithmOutcome { name: alg.name.clone(), records: t.records, error: None, certification: None },
                Err(f) => AlgorithmOutcome { name: alg.name.clone(), records: f.records, error: Some(f.error), certification: None },
            },
            ResolvedKind::Baseline(cfg) => {
                match run_baseline(&prepared.instance, &prepared.seq, cfg, Some(&optimum)) {
                    Ok(t) => AlgorithmOutcome { name: alg.name.clone(), records: t.records, error: None, certification: None },
                    Err(f) => AlgorithmOutcome { name: alg.name.clone(), records: f.records, error: Some(f.error), certification: None },
                }
            }
        };
        let failed = outcome.error.is_some();
        algorithms.push(outcome);
        if failed {
            break;
        }
    }
    Ok(ScenarioOutcome { algorithms })
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path.file_name().ok_or_else(|| Error::InvalidInput(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `<name>.csv` per algorithm, `config.resolved`, and
/// `certification.txt` when any certification ran.
pub fn write_outputs(prepared: &Prepared, outcome: &ScenarioOutcome, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let echo = out_dir.join("config.resolved");
    write_atomic(&echo, &prepared.resolved_echo())?;
    written.push(echo);
    for a in &outcome.algorithms {
        let p = out_dir.join(format!("{}.csv", a.name));
        write_atomic(&p, &to_csv(&a.records))?;
        written.push(p);
    }
    let report = outcome.report_text();
    if !report.is_empty() {
        let p = out_dir.join("certification.txt");
        write_atomic(&p, &report)?;
        written.push(p);
    }
    Ok(written)
}
