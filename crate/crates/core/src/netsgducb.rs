//! Net-SGD-UCB: momentum SGD estimates with EMA-smoothed diagonal gradient
//! accumulators, aggregated across neighbors for the common block.

use crate::domain::{concat_context, Context, Dimensions, Topology};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::policy::{argmax_lowest, Decision, Policy, UcbScore};
use crate::weights::{ArmCounts, WeightMatrixSet};

/// Default learning rate. Smaller rates leave the estimates far from
/// converged within a thousand rounds.
pub const DEFAULT_ETA_SGD: f64 = 0.5;

/// Default multiplier in `α^sgd = (1 + σ²)·α₀`. The accumulator tracks squared
/// residuals, so the bonus of a well-fit arm grows like `1/|residual|`; a
/// large multiplier locks each node onto its first well-fit arm.
pub const DEFAULT_ALPHA0_SGD: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SgdHyperparams {
    pub eta_sgd: f64,
    pub mu: f64,
    pub gamma: f64,
    pub alpha_sgd: f64,
}

impl SgdHyperparams {
    /// Defaults with `α^sgd = (1 + σ²)·alpha0`.
    pub fn for_noise(sigma: f64, alpha0: f64) -> Self {
        Self {
            eta_sgd: DEFAULT_ETA_SGD,
            mu: 0.9,
            gamma: 0.95,
            alpha_sgd: (1.0 + sigma * sigma) * alpha0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_sgd > 0.0 && self.eta_sgd.is_finite()) {
            return Err(invalid("eta_sgd", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(invalid("mu", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", "must lie in [0, 1)"));
        }
        if !(self.alpha_sgd > 0.0 && self.alpha_sgd.is_finite()) {
            return Err(invalid("alpha_sgd", "must be positive"));
        }
        Ok(())
    }
}

/// Per (node, arm) learner state over the full context `[common, specific]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdArmState {
    pub theta_hat: Vec<f64>,
    pub v: Vec<f64>,
    pub g_diag: Vec<f64>,
}

impl SgdArmState {
    pub fn new(dim: usize) -> Self {
        Self {
            theta_hat: vec![0.0; dim],
            v: vec![0.0; dim],
            g_diag: vec![1.0; dim],
        }
    }
}

/// Gradient of `½(r − xᵀθ̂)²`: `−(r − xᵀθ̂)·x`.
pub fn sgd_gradient(theta_hat: &[f64], x: &[f64], r: f64) -> Vec<f64> {
    let residual = r - linalg::dot(x, theta_hat);
    x.iter().map(|xi| -residual * xi).collect()
}

/// Momentum, parameter and accumulator updates, in that order:
/// `v ← μv + (1−μ)g`, `θ̂ ← θ̂ − ηv`, `G ← γG + (1−γ)g²`.
pub fn sgd_apply(state: &mut SgdArmState, grad: &[f64], hyper: &SgdHyperparams) {
    let SgdHyperparams {
        eta_sgd, mu, gamma, ..
    } = *hyper;
    for h in 0..grad.len() {
        state.v[h] = mu * state.v[h] + (1.0 - mu) * grad[h];
        state.theta_hat[h] -= eta_sgd * state.v[h];
        state.g_diag[h] = gamma * state.g_diag[h] + (1.0 - gamma) * grad[h] * grad[h];
    }
}

/// `Σ_{j ∈ component(i)} ω_ji^k θ̂_{j,c}^k`.
pub fn aggregate_common(
    states: &[Vec<SgdArmState>],
    weights: &WeightMatrixSet,
    topology: &Topology,
    i: usize,
    arm: usize,
    d_common: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; d_common];
    for &j in topology.neighbors(i) {
        let w = weights.weight(arm, j, i);
        for (o, th) in out.iter_mut().zip(&states[j][arm].theta_hat[..d_common]) {
            *o += w * th;
        }
    }
    out
}

// xᵀ diag(g)⁻¹ x
fn inv_diag_quad(x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(xi, gi)| xi * xi / gi).sum()
}

/// `xᵀ[θ̂_c, θ̂_{i,s}] + α√(Σ_j ω_ji² x_cᵀG_{j,c}⁻¹x_c + x_sᵀG_{i,s}⁻¹x_s)`,
/// where `θ̂_c` is the weighted aggregate of the neighbors' common parts.
pub fn netsgd_ucb(
    states: &[Vec<SgdArmState>],
    weights: &WeightMatrixSet,
    topology: &Topology,
    i: usize,
    ctx: &Context,
    arm: usize,
    alpha_sgd: f64,
) -> UcbScore {
    let dc = ctx.common.len();
    let common = aggregate_common(states, weights, topology, i, arm, dc);
    let own = &states[i][arm];
    let mut common_quad = 0.0;
    for &j in topology.neighbors(i) {
        let w = weights.weight(arm, j, i);
        common_quad += w * w * inv_diag_quad(&ctx.common, &states[j][arm].g_diag[..dc]);
    }
    let specific_quad = inv_diag_quad(&ctx.specific, &own.g_diag[dc..]);
    let width = (common_quad + specific_quad).sqrt();
    UcbScore {
        estimate: linalg::dot(&ctx.common, &common)
            + linalg::dot(&ctx.specific, &own.theta_hat[dc..]),
        radius: alpha_sgd * width,
        width,
    }
}

#[derive(Debug, Clone)]
pub struct NetSgdUcb {
    dims: Dimensions,
    topology: Topology,
    hyper: SgdHyperparams,
    consensus_feedback: bool,
    // states[node][arm]
    states: Vec<Vec<SgdArmState>>,
    counts: ArmCounts,
    weights: WeightMatrixSet,
    round_comm: u64,
}

impl NetSgdUcb {
    pub fn new(
        dims: &Dimensions,
        topology: Topology,
        hyper: SgdHyperparams,
        rho: f64,
        beta: f64,
    ) -> Self {
        assert_eq!(topology.n_nodes(), dims.n_nodes);
        let states = (0..dims.n_nodes)
            .map(|i| vec![SgdArmState::new(dims.d_full(i)); dims.n_arms])
            .collect();
        Self {
            dims: dims.clone(),
            topology,
            hyper,
            consensus_feedback: false,
            states,
            counts: ArmCounts::new(dims.n_nodes, dims.n_arms),
            weights: WeightMatrixSet::identity(dims.n_nodes, dims.n_arms, rho, beta),
            round_comm: 0,
        }
    }

    /// When enabled, the selected arm's local common estimate is replaced by
    /// the neighbor aggregate before the momentum step.
    pub fn with_consensus_feedback(mut self, on: bool) -> Self {
        self.consensus_feedback = on;
        self
    }

    pub fn states(&self) -> &[Vec<SgdArmState>] {
        &self.states
    }

    pub fn weight_set(&self) -> &WeightMatrixSet {
        &self.weights
    }

    pub fn weight_set_mut(&mut self) -> &mut WeightMatrixSet {
        &mut self.weights
    }

    /// Each ordered neighbor pair exchanges the `d_c` common estimate and the
    /// `d_c` common accumulator diagonal per arm: `K·Σ s(s−1)·2d_c`.
    pub fn round_comm_formula(dims: &Dimensions, topology: &Topology) -> u64 {
        dims.n_arms as u64 * topology.ordered_pairs() * 2 * dims.d_common as u64
    }

    pub fn score(&self, i: usize, ctx: &Context, arm: usize) -> UcbScore {
        netsgd_ucb(
            &self.states,
            &self.weights,
            &self.topology,
            i,
            ctx,
            arm,
            self.hyper.alpha_sgd,
        )
    }
}

impl Policy for NetSgdUcb {
    fn name(&self) -> &'static str {
        "netsgducb"
    }

    fn play_round(
        &mut self,
        _t: usize,
        contexts: &[Context],
        reward: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Vec<Decision> {
        self.weights.update(&self.counts, contexts, &self.topology);

        let decisions: Vec<Decision> = contexts
            .iter()
            .enumerate()
            .map(|(i, ctx)| {
                let scores: Vec<UcbScore> = (0..self.dims.n_arms)
                    .map(|k| self.score(i, ctx, k))
                    .collect();
                let arm = argmax_lowest(&scores);
                Decision {
                    arm,
                    radius: scores[arm].width,
                }
            })
            .collect();

        // aggregates read the snapshot, before any node writes
        let feedback: Vec<Option<Vec<f64>>> = if self.consensus_feedback {
            decisions
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    Some(aggregate_common(
                        &self.states,
                        &self.weights,
                        &self.topology,
                        i,
                        d.arm,
                        self.dims.d_common,
                    ))
                })
                .collect()
        } else {
            vec![None; decisions.len()]
        };

        for (i, ((ctx, d), agg)) in contexts.iter().zip(&decisions).zip(feedback).enumerate() {
            let r = reward(i, d.arm);
            let x = concat_context(ctx);
            let state = &mut self.states[i][d.arm];
            let grad = sgd_gradient(&state.theta_hat, &x, r);
            if let Some(agg) = agg {
                state.theta_hat[..agg.len()].copy_from_slice(&agg);
            }
            sgd_apply(state, &grad, &self.hyper);
            debug_assert!(state.g_diag.iter().all(|g| *g > 0.0));
            self.counts.increment(i, d.arm);
        }
        self.round_comm = Self::round_comm_formula(&self.dims, &self.topology);
        decisions
    }

    fn comm_scalars(&self) -> u64 {
        self.round_comm
    }

    fn weights(&self) -> Option<&WeightMatrixSet> {
        Some(&self.weights)
    }
}
