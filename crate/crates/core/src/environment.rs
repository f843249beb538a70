//! Synthetic networked linear-reward environment.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, purpose,
//! node, index)`, so contexts for round `t` can be regenerated in any order
//! and node `i` of an `N`-node instance sees exactly the same parameters and
//! contexts as node `i` of a larger instance built from the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{clamp_to_unit_ball, Context, Dimensions};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Horizon used by the presets.
pub const PRESET_HORIZON: usize = 1000;

pub const PRESET_NAMES: [&str; 6] = [
    "default",
    "low_shared_ratio",
    "high_shared_ratio",
    "outlier",
    "rich_actions",
    "large_gap",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub dims: Dimensions,
    pub noise_sigma: f64,
    pub context_mean_common: Vec<f64>,
    /// Common-block covariance is `scale · I`.
    pub context_cov_scale_common: f64,
    /// Per-node specific-block covariance scales, length `n_nodes`.
    pub context_cov_scale_specific: Vec<f64>,
    pub reward_gap_scale: f64,
    pub outlier_probability: f64,
    pub outlier_magnitude: f64,
    pub seed: u64,
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(invalid("noise_sigma", "must be finite and non-negative"));
        }
        if self.context_mean_common.len() != self.dims.d_common {
            return Err(invalid(
                "context_mean_common",
                format!(
                    "has length {}, expected d_common = {}",
                    self.context_mean_common.len(),
                    self.dims.d_common
                ),
            ));
        }
        if self.context_mean_common.iter().any(|x| !x.is_finite()) {
            return Err(invalid("context_mean_common", "must be finite"));
        }
        if !(self.context_cov_scale_common > 0.0 && self.context_cov_scale_common.is_finite()) {
            return Err(invalid("context_cov_scale_common", "must be positive"));
        }
        if self.context_cov_scale_specific.len() != self.dims.n_nodes {
            return Err(invalid(
                "context_cov_scale_specific",
                format!(
                    "has {} entries for {} nodes",
                    self.context_cov_scale_specific.len(),
                    self.dims.n_nodes
                ),
            ));
        }
        if self
            .context_cov_scale_specific
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(invalid(
                "context_cov_scale_specific",
                "entries must be positive",
            ));
        }
        if !(self.reward_gap_scale > 0.0 && self.reward_gap_scale.is_finite()) {
            return Err(invalid("reward_gap_scale", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.outlier_probability) {
            return Err(invalid("outlier_probability", "must lie in [0, 1]"));
        }
        if !(self.outlier_magnitude >= 0.0 && self.outlier_magnitude.is_finite()) {
            return Err(invalid(
                "outlier_magnitude",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Resizes the network to `n` nodes, keeping every per-node setting of
    /// the first `min(n, N)` nodes and extending the rest like a preset does.
    pub fn with_nodes(mut self, n: usize) -> Self {
        let d_s = self.dims.d_specific.last().copied().unwrap_or(0);
        self.dims.d_specific.resize(n, d_s);
        self.dims.n_nodes = n;
        let old = self.context_cov_scale_specific.len();
        self.context_cov_scale_specific.truncate(n);
        for node in old..n {
            self.context_cov_scale_specific.push(specific_scale(node));
        }
        self
    }
}

// Per-node specific covariance scale in [0.05, 0.2], fixed per node index.
fn specific_scale(node: usize) -> f64 {
    let mut rng = stream(0x5eed, Stream::PresetScale, node as u64, 0);
    rng.random_range(0.05..=0.2)
}

/// Returns a named instance configuration.
pub fn preset(name: &str) -> Result<InstanceConfig> {
    let n = 12;
    let base = |k: usize, d_c: usize, d_s: usize| InstanceConfig {
        dims: Dimensions::uniform(n, k, d_c, d_s),
        noise_sigma: 0.1,
        context_mean_common: vec![0.0; d_c],
        context_cov_scale_common: 0.1,
        context_cov_scale_specific: (0..n).map(specific_scale).collect(),
        reward_gap_scale: 1.0,
        outlier_probability: 0.0,
        outlier_magnitude: 1.0,
        seed: 0,
    };
    let cfg = match name {
        "default" => base(4, 4, 4),
        "low_shared_ratio" => base(4, 2, 6),
        "high_shared_ratio" => base(4, 6, 2),
        "outlier" => InstanceConfig {
            outlier_probability: 0.05,
            outlier_magnitude: 10.0,
            ..base(4, 4, 4)
        },
        "rich_actions" => base(10, 4, 4),
        "large_gap" => InstanceConfig {
            reward_gap_scale: 4.0,
            ..base(4, 4, 4)
        },
        other => {
            return Err(Error::UnknownPreset {
                name: other.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(cfg)
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Anchor = 1,
    ArmCommon = 2,
    ArmSpecific = 3,
    Context = 4,
    Noise = 5,
    PresetScale = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, purpose: Stream, a: u64, b: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for word in [purpose as u64, a, b] {
        h = splitmix(h ^ word);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn gaussian_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

// Scales a block so that its norm is at most 1/√2; two such blocks
// concatenate to a vector inside the unit ball.
fn into_half_ball(v: &mut [f64]) {
    let scale = (std::f64::consts::SQRT_2 * linalg::norm(v)).max(1.0);
    v.iter_mut().for_each(|x| *x /= scale);
}

/// True arm parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// One shared common parameter per arm.
    pub theta_common: Vec<Vec<f64>>,
    /// `theta_specific[node][arm]`.
    pub theta_specific: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct Environment {
    cfg: InstanceConfig,
    truth: GroundTruth,
}

impl Environment {
    /// Draws the ground truth for `cfg`.
    ///
    /// Common arm parameters are `anchor + gap·z_k`, with one anchor shared by
    /// all arms, so a larger `reward_gap_scale` makes the arms less alike and
    /// spreads their expected rewards.
    pub fn new(cfg: InstanceConfig) -> Result<Self> {
        cfg.validate()?;
        let dims = &cfg.dims;
        let anchor = gaussian_vec(&mut stream(cfg.seed, Stream::Anchor, 0, 0), dims.d_common);
        let theta_common = (0..dims.n_arms)
            .map(|k| {
                let z = gaussian_vec(
                    &mut stream(cfg.seed, Stream::ArmCommon, k as u64, 0),
                    dims.d_common,
                );
                let mut th: Vec<f64> = anchor
                    .iter()
                    .zip(&z)
                    .map(|(a, z)| a + cfg.reward_gap_scale * z)
                    .collect();
                into_half_ball(&mut th);
                th
            })
            .collect();
        let theta_specific = (0..dims.n_nodes)
            .map(|i| {
                (0..dims.n_arms)
                    .map(|k| {
                        let mut th = gaussian_vec(
                            &mut stream(cfg.seed, Stream::ArmSpecific, i as u64, k as u64),
                            dims.d_specific[i],
                        );
                        into_half_ball(&mut th);
                        th
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg,
            truth: GroundTruth {
                theta_common,
                theta_specific,
            },
        })
    }

    pub fn config(&self) -> &InstanceConfig {
        &self.cfg
    }

    pub fn dims(&self) -> &Dimensions {
        &self.cfg.dims
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Full parameter `[θ_c^k, θ_{i,s}^k]` of `(node, arm)`.
    pub fn theta(&self, node: usize, arm: usize) -> Vec<f64> {
        let mut v = self.truth.theta_common[arm].clone();
        v.extend_from_slice(&self.truth.theta_specific[node][arm]);
        v
    }

    /// Contexts of all nodes at round `t` (1-based).
    pub fn sample_contexts(&self, t: usize) -> Vec<Context> {
        debug_assert!(t >= 1);
        (0..self.cfg.dims.n_nodes)
            .map(|i| self.sample_context(i, t))
            .collect()
    }

    fn sample_context(&self, node: usize, t: usize) -> Context {
        let cfg = &self.cfg;
        let mut rng = stream(cfg.seed, Stream::Context, node as u64, t as u64);
        let sd_c = cfg.context_cov_scale_common.sqrt();
        let sd_s = cfg.context_cov_scale_specific[node].sqrt();
        let mut full: Vec<f64> = cfg
            .context_mean_common
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + sd_c * z
            })
            .collect();
        for _ in 0..cfg.dims.d_specific[node] {
            let z: f64 = StandardNormal.sample(&mut rng);
            full.push(sd_s * z);
        }
        let coin: f64 = rng.random();
        if coin < cfg.outlier_probability {
            full.iter_mut().for_each(|x| *x *= cfg.outlier_magnitude);
        }
        let full = clamp_to_unit_ball(&full).expect("finite gaussian sample");
        Context::split(&full, cfg.dims.d_common).expect("length >= d_common")
    }

    fn check_dims(&self, node: usize, ctx: &Context) -> Result<()> {
        let d = &self.cfg.dims;
        if ctx.common.len() != d.d_common {
            return Err(Error::DimensionMismatch {
                expected: d.d_common,
                got: ctx.common.len(),
            });
        }
        if ctx.specific.len() != d.d_specific[node] {
            return Err(Error::DimensionMismatch {
                expected: d.d_specific[node],
                got: ctx.specific.len(),
            });
        }
        Ok(())
    }

    /// `x_cᵀθ_c^k + x_sᵀθ_{i,s}^k`.
    pub fn expected_reward(&self, node: usize, arm: usize, ctx: &Context) -> Result<f64> {
        self.check_dims(node, ctx)?;
        Ok(linalg::dot(&ctx.common, &self.truth.theta_common[arm])
            + linalg::dot(&ctx.specific, &self.truth.theta_specific[node][arm]))
    }

    /// Expected reward plus `N(0, σ²)` noise drawn from `rng`.
    pub fn draw_reward(
        &self,
        node: usize,
        arm: usize,
        ctx: &Context,
        rng: &mut impl Rng,
    ) -> Result<f64> {
        let mean = self.expected_reward(node, arm, ctx)?;
        if self.cfg.noise_sigma == 0.0 {
            return Ok(mean);
        }
        let z: f64 = StandardNormal.sample(rng);
        Ok(mean + self.cfg.noise_sigma * z)
    }

    /// Argmax of the expected reward, ties to the lowest index.
    pub fn optimal_arm(&self, node: usize, ctx: &Context) -> Result<usize> {
        let mut best = 0;
        let mut best_val = self.expected_reward(node, 0, ctx)?;
        for k in 1..self.cfg.dims.n_arms {
            let v = self.expected_reward(node, k, ctx)?;
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        Ok(best)
    }

    /// Reward-noise stream for `(node, t)`, independent of the chosen arm so
    /// every policy faces the same noise realizations.
    pub fn noise_rng(&self, node: usize, t: usize) -> ChaCha8Rng {
        stream(self.cfg.seed, Stream::Noise, node as u64, t as u64)
    }
}
