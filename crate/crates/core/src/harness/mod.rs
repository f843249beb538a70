//! Experiment wiring: configuration, replications, metrics and CSV output.

pub mod io;
pub mod metrics;
pub mod sweep;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::{RoundRecord, Topology};
use crate::environment::{preset, Environment, InstanceConfig};
use crate::error::{invalid, Error, Result};
use crate::netlinucb::NetLinUcb;
use crate::netsgducb::{NetSgdUcb, SgdHyperparams, DEFAULT_ALPHA0_SGD, DEFAULT_ETA_SGD};
use crate::policy::Policy;
use crate::ridge::{default_alpha_ridge, DisjointLinUcb, SharedLinUcb};

pub use metrics::{per_node_average, radius_reduction, time_average_curve, RegretTrace};

/// Overrides the configured output directory when set.
pub const OUTPUT_DIR_ENV: &str = "NETBANDIT_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Disjoint,
    Shared,
    NetLinUcb,
    NetSgdUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Disjoint,
        PolicyKind::Shared,
        PolicyKind::NetLinUcb,
        PolicyKind::NetSgdUcb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Disjoint => "disjoint",
            PolicyKind::Shared => "shared",
            PolicyKind::NetLinUcb => "netlinucb",
            PolicyKind::NetSgdUcb => "netsgducb",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disjoint" => Ok(PolicyKind::Disjoint),
            "shared" => Ok(PolicyKind::Shared),
            "netlinucb" => Ok(PolicyKind::NetLinUcb),
            "netsgducb" => Ok(PolicyKind::NetSgdUcb),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Policy hyperparameters. Unset exploration parameters fall back to
/// `1 + √(ln(2T)/2)` for ridge and `(1 + σ²)·alpha0_sgd` for SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    pub alpha_ridge: Option<f64>,
    pub alpha0_sgd: f64,
    pub eta_sgd: f64,
    pub mu: f64,
    pub gamma: f64,
    pub rho: f64,
    pub beta: f64,
    pub consensus_feedback: bool,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            alpha_ridge: None,
            alpha0_sgd: DEFAULT_ALPHA0_SGD,
            eta_sgd: DEFAULT_ETA_SGD,
            mu: 0.9,
            gamma: 0.95,
            rho: 0.9,
            beta: 0.5,
            consensus_feedback: false,
        }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha_ridge {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invalid("params.alpha_ridge", "must be positive"));
            }
        }
        if !(self.alpha0_sgd > 0.0 && self.alpha0_sgd.is_finite()) {
            return Err(invalid("params.alpha0_sgd", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(invalid("params.rho", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("params.beta", "must lie in [0, 1]"));
        }
        self.sgd(0.0).validate().map_err(|e| match e {
            Error::InvalidConfig { field, reason } => Error::InvalidConfig {
                field: match field {
                    "eta_sgd" => "params.eta_sgd",
                    "mu" => "params.mu",
                    "gamma" => "params.gamma",
                    other => other,
                },
                reason,
            },
            other => other,
        })
    }

    pub fn alpha_ridge(&self, horizon: usize) -> f64 {
        self.alpha_ridge
            .unwrap_or_else(|| default_alpha_ridge(horizon))
    }

    pub fn sgd(&self, sigma: f64) -> SgdHyperparams {
        SgdHyperparams {
            eta_sgd: self.eta_sgd,
            mu: self.mu,
            gamma: self.gamma,
            alpha_sgd: (1.0 + sigma * sigma) * self.alpha0_sgd,
        }
    }
}

/// Which instance to simulate: a preset (optionally resized) or a fully
/// explicit configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n_nodes: Option<usize>,
    #[serde(default)]
    pub config: Option<InstanceConfig>,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            preset: Some("default".into()),
            n_nodes: None,
            config: None,
        }
    }
}

impl InstanceSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<InstanceConfig> {
        let cfg = match (&self.config, &self.preset) {
            (Some(c), _) => c.clone(),
            (None, Some(p)) => preset(p)?,
            (None, None) => return Err(invalid("instance", "needs `preset` or `config`")),
        };
        let cfg = match self.n_nodes {
            Some(0) => return Err(invalid("instance.n_nodes", "must be at least 1")),
            Some(n) => cfg.with_nodes(n),
            None => cfg,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One experiment cell: a policy on a topology over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub instance: InstanceSpec,
    pub policy: PolicyKind,
    #[serde(default = "default_topology")]
    pub topology: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: PolicyParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub(crate) fn default_topology() -> String {
    "full".into()
}

pub(crate) fn default_horizon() -> usize {
    crate::environment::PRESET_HORIZON
}

pub(crate) fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

impl RunConfig {
    pub fn new(policy: PolicyKind) -> Self {
        Self {
            instance: InstanceSpec::default(),
            policy,
            topology: default_topology(),
            horizon: default_horizon(),
            seeds: default_seeds(),
            params: PolicyParams::default(),
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Validates every field and returns the resolved instance and topology.
    pub fn resolve(&self) -> Result<(InstanceConfig, Topology)> {
        let inst = self.instance.resolve()?;
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "needs at least one seed"));
        }
        self.params.validate()?;
        let topo = Topology::parse(&self.topology, inst.dims.n_nodes)?;
        Ok((inst, topo))
    }
}

/// Builds a fresh policy for one replication.
pub fn build_policy(
    kind: PolicyKind,
    inst: &InstanceConfig,
    topology: &Topology,
    params: &PolicyParams,
    horizon: usize,
) -> Box<dyn Policy> {
    let dims = &inst.dims;
    let alpha = params.alpha_ridge(horizon);
    match kind {
        PolicyKind::Disjoint => Box::new(DisjointLinUcb::new(dims, alpha)),
        PolicyKind::Shared => Box::new(SharedLinUcb::new(dims, alpha)),
        PolicyKind::NetLinUcb => Box::new(NetLinUcb::new(
            dims,
            topology.clone(),
            alpha,
            params.rho,
            params.beta,
        )),
        PolicyKind::NetSgdUcb => Box::new(
            NetSgdUcb::new(
                dims,
                topology.clone(),
                params.sgd(inst.noise_sigma),
                params.rho,
                params.beta,
            )
            .with_consensus_feedback(params.consensus_feedback),
        ),
    }
}

/// An environment and a policy advanced one round at a time.
pub struct Simulation {
    env: Environment,
    policy: Box<dyn Policy>,
    t: usize,
    elapsed_secs: f64,
}

impl Simulation {
    pub fn new(env: Environment, policy: Box<dyn Policy>) -> Self {
        Self {
            env,
            policy,
            t: 0,
            elapsed_secs: 0.0,
        }
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn policy(&self) -> &dyn Policy {
        self.policy.as_ref()
    }

    /// Rounds played so far.
    pub fn round(&self) -> usize {
        self.t
    }

    /// Seconds spent inside the policy.
    pub fn policy_seconds(&self) -> f64 {
        self.elapsed_secs
    }

    /// Plays the next round and returns one record per node.
    pub fn step(&mut self) -> Vec<RoundRecord> {
        self.t += 1;
        let t = self.t;
        let env = &self.env;
        let contexts = env.sample_contexts(t);
        let mut realized = vec![f64::NAN; contexts.len()];
        let start = Instant::now();
        let decisions = self.policy.play_round(t, &contexts, &mut |i, k| {
            let r = env
                .draw_reward(i, k, &contexts[i], &mut env.noise_rng(i, t))
                .expect("contexts come from this environment");
            realized[i] = r;
            r
        });
        self.elapsed_secs += start.elapsed().as_secs_f64();

        decisions
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let ctx = &contexts[i];
                let optimal_arm = env.optimal_arm(i, ctx).expect("matching dims");
                let rec = RoundRecord {
                    t,
                    node: i,
                    chosen_arm: d.arm,
                    optimal_arm,
                    reward: realized[i],
                    expected_reward_chosen: env
                        .expected_reward(i, d.arm, ctx)
                        .expect("matching dims"),
                    expected_reward_optimal: env
                        .expected_reward(i, optimal_arm, ctx)
                        .expect("matching dims"),
                    radius: d.radius,
                };
                debug_assert!(rec.regret() >= 0.0);
                debug_assert!(rec.expected_reward_chosen.abs() <= 1.0 + 1e-12);
                rec
            })
            .collect()
    }
}

/// Output of one `(config, seed)` replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub trace: RegretTrace,
    pub records: Vec<RoundRecord>,
    /// Policy wall-clock seconds per round.
    pub seconds_per_round: f64,
}

/// Runs `cfg` with `seed`; the seed drives the instance and every draw.
pub fn run_replication(cfg: &RunConfig, seed: u64) -> Result<Replication> {
    run_replication_observed(cfg, seed, &mut |_| Ok(()))
}

/// Like [`run_replication`], calling `observe` after every round.
pub fn run_replication_observed(
    cfg: &RunConfig,
    seed: u64,
    observe: &mut dyn FnMut(&Simulation) -> Result<()>,
) -> Result<Replication> {
    let (mut inst, topo) = cfg.resolve()?;
    inst.seed = seed;
    let env = Environment::new(inst.clone())?;
    let policy = build_policy(cfg.policy, &inst, &topo, &cfg.params, cfg.horizon);
    let mut sim = Simulation::new(env, policy);

    let n = inst.dims.n_nodes;
    let mut trace = RegretTrace::new(seed, n);
    let mut records = Vec::with_capacity(n * cfg.horizon);
    for _ in 0..cfg.horizon {
        let round = sim.step();
        trace.push_round(&round, sim.policy().comm_scalars());
        records.extend(round);
        observe(&sim)?;
    }
    Ok(Replication {
        seed,
        trace,
        records,
        seconds_per_round: sim.policy_seconds() / cfg.horizon as f64,
    })
}
