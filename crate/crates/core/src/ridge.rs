//! Ridge regression with `λ = 1` and the two LinUCB baselines.

use crate::domain::{concat_context, Context, Dimensions};
use crate::linalg;
use crate::policy::{argmax_lowest, Decision, Policy, UcbScore};

/// Rank-one inverse updates between two direct refreshes of `W⁻¹`.
pub const REFRESH_INTERVAL: usize = 512;

/// `α = 1 + √(ln(2T)/2)`.
pub fn default_alpha_ridge(horizon: usize) -> f64 {
    1.0 + ((2.0 * horizon as f64).ln() / 2.0).sqrt()
}

/// Design matrix `W = I + Σ x xᵀ`, its inverse, and `b = Σ r x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    dim: usize,
    w: Vec<f64>,
    w_inv: Vec<f64>,
    b: Vec<f64>,
    since_refresh: usize,
}

impl RidgeState {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            w: linalg::identity(dim),
            w_inv: linalg::identity(dim),
            b: vec![0.0; dim],
            since_refresh: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `W`.
    pub fn design(&self) -> &[f64] {
        &self.w
    }

    /// Row-major `W⁻¹` as maintained.
    pub fn design_inverse(&self) -> &[f64] {
        &self.w_inv
    }

    pub fn response(&self) -> &[f64] {
        &self.b
    }

    /// `W += x xᵀ`, `b += r x`; `W⁻¹` follows by Sherman–Morrison and is
    /// recomputed directly every [`REFRESH_INTERVAL`] updates.
    pub fn update(&mut self, x: &[f64], r: f64) {
        assert_eq!(x.len(), self.dim);
        if x.iter().all(|v| *v == 0.0) {
            return;
        }
        let d = self.dim;
        for i in 0..d {
            self.b[i] += r * x[i];
            for j in 0..d {
                self.w[i * d + j] += x[i] * x[j];
            }
        }
        let u = linalg::mat_vec(&self.w_inv, x);
        let denom = 1.0 + linalg::dot(x, &u);
        for i in 0..d {
            for j in 0..d {
                self.w_inv[i * d + j] -= u[i] * u[j] / denom;
            }
        }
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh();
        }
    }

    /// Recomputes `W⁻¹` from `W`.
    pub fn refresh(&mut self) {
        self.w_inv =
            linalg::spd_inverse(&self.w, self.dim).expect("W = I + Σ x xᵀ is positive definite");
        self.since_refresh = 0;
    }

    /// `θ̂ = W⁻¹ b`.
    pub fn point(&self) -> Vec<f64> {
        linalg::mat_vec(&self.w_inv, &self.b)
    }

    /// `xᵀθ̂`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        linalg::dot(x, &self.point())
    }

    /// `xᵀ W⁻¹ x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        linalg::quad_form(&self.w_inv, x).max(0.0)
    }

    /// LinUCB score `xᵀθ̂ + α√(xᵀW⁻¹x)`.
    pub fn ucb(&self, x: &[f64], alpha: f64) -> UcbScore {
        let width = self.quad(x).sqrt();
        UcbScore {
            estimate: self.predict(x),
            radius: alpha * width,
            width,
        }
    }
}

/// Independent ridge states for the common and specific blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeBlockState {
    pub common: RidgeState,
    pub specific: RidgeState,
}

impl RidgeBlockState {
    pub fn new(d_common: usize, d_specific: usize) -> Self {
        Self {
            common: RidgeState::new(d_common),
            specific: RidgeState::new(d_specific),
        }
    }

    /// Both blocks absorb the full reward.
    pub fn update(&mut self, ctx: &Context, r: f64) {
        self.common.update(&ctx.common, r);
        self.specific.update(&ctx.specific, r);
    }

    /// `(xᵀθ̂_c + xᵀθ̂_s) + α√(q_c + q_s)`.
    pub fn ucb(&self, ctx: &Context, alpha: f64) -> UcbScore {
        block_ucb(
            self.common.predict(&ctx.common),
            self.specific.predict(&ctx.specific),
            self.common.quad(&ctx.common),
            self.specific.quad(&ctx.specific),
            alpha,
        )
    }
}

/// The block-split UCB shared by the split Disjoint variant and NetLinUCB.
pub(crate) fn block_ucb(
    common_point: f64,
    specific_point: f64,
    common_quad: f64,
    specific_quad: f64,
    alpha: f64,
) -> UcbScore {
    let width = (common_quad + specific_quad).sqrt();
    UcbScore {
        estimate: common_point + specific_point,
        radius: alpha * width,
        width,
    }
}

/// UCB argmax over per-arm states on the full concatenated context.
pub fn disjoint_select(states: &[RidgeState], ctx: &Context, alpha: f64) -> usize {
    let x = concat_context(ctx);
    let scores: Vec<UcbScore> = states.iter().map(|s| s.ucb(&x, alpha)).collect();
    argmax_lowest(&scores)
}

/// Places node `i`'s context into the block-sparse global vector
/// `[x_c, 0, …, x_{i,s}, …, 0]`.
pub fn shared_embed(node: usize, ctx: &Context, dims: &Dimensions) -> Vec<f64> {
    let mut g = vec![0.0; dims.d_global()];
    g[..dims.d_common].copy_from_slice(&ctx.common);
    let off = dims.global_offset(node);
    g[off..off + ctx.specific.len()].copy_from_slice(&ctx.specific);
    g
}

/// UCB argmax over the global per-arm states on node `i`'s embedded context.
pub fn shared_select(
    states: &[RidgeState],
    node: usize,
    ctx: &Context,
    dims: &Dimensions,
    alpha: f64,
) -> usize {
    let x = shared_embed(node, ctx, dims);
    let scores: Vec<UcbScore> = states.iter().map(|s| s.ucb(&x, alpha)).collect();
    argmax_lowest(&scores)
}

#[derive(Debug, Clone)]
enum LocalModel {
    Full(RidgeState),
    Split(RidgeBlockState),
}

impl LocalModel {
    fn ucb(&self, ctx: &Context, alpha: f64) -> UcbScore {
        match self {
            LocalModel::Full(s) => s.ucb(&concat_context(ctx), alpha),
            LocalModel::Split(s) => s.ucb(ctx, alpha),
        }
    }

    fn update(&mut self, ctx: &Context, r: f64) {
        match self {
            LocalModel::Full(s) => s.update(&concat_context(ctx), r),
            LocalModel::Split(s) => s.update(ctx, r),
        }
    }
}

/// One independent LinUCB learner per node; no communication.
///
/// With `block_split` each arm keeps separate common and specific ridge
/// states and the radius is `α√(q_c + q_s)`, which is what NetLinUCB
/// reduces to when every node is isolated.
#[derive(Debug, Clone)]
pub struct DisjointLinUcb {
    alpha: f64,
    // models[node][arm]
    models: Vec<Vec<LocalModel>>,
}

impl DisjointLinUcb {
    pub fn new(dims: &Dimensions, alpha: f64) -> Self {
        Self::build(dims, alpha, false)
    }

    pub fn block_split(dims: &Dimensions, alpha: f64) -> Self {
        Self::build(dims, alpha, true)
    }

    fn build(dims: &Dimensions, alpha: f64, split: bool) -> Self {
        let models = (0..dims.n_nodes)
            .map(|i| {
                (0..dims.n_arms)
                    .map(|_| {
                        if split {
                            LocalModel::Split(RidgeBlockState::new(
                                dims.d_common,
                                dims.d_specific[i],
                            ))
                        } else {
                            LocalModel::Full(RidgeState::new(dims.d_full(i)))
                        }
                    })
                    .collect()
            })
            .collect();
        Self { alpha, models }
    }
}

impl Policy for DisjointLinUcb {
    fn name(&self) -> &'static str {
        "disjoint"
    }

    fn play_round(
        &mut self,
        _t: usize,
        contexts: &[Context],
        reward: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Vec<Decision> {
        let alpha = self.alpha;
        contexts
            .iter()
            .zip(self.models.iter_mut())
            .enumerate()
            .map(|(i, (ctx, arms))| {
                let scores: Vec<UcbScore> = arms.iter().map(|m| m.ucb(ctx, alpha)).collect();
                let arm = argmax_lowest(&scores);
                let r = reward(i, arm);
                arms[arm].update(ctx, r);
                Decision {
                    arm,
                    radius: scores[arm].width,
                }
            })
            .collect()
    }

    fn comm_scalars(&self) -> u64 {
        0
    }
}

/// A single central LinUCB over the block-sparse global embedding. Nodes are
/// served one after another within a round, each seeing the updates of the
/// nodes before it.
#[derive(Debug, Clone)]
pub struct SharedLinUcb {
    dims: Dimensions,
    alpha: f64,
    states: Vec<RidgeState>,
    round_comm: u64,
}

impl SharedLinUcb {
    pub fn new(dims: &Dimensions, alpha: f64) -> Self {
        Self {
            dims: dims.clone(),
            alpha,
            states: vec![RidgeState::new(dims.d_global()); dims.n_arms],
            round_comm: 0,
        }
    }

    pub fn states(&self) -> &[RidgeState] {
        &self.states
    }

    /// Every node's full parameter block is synchronized to every other node
    /// for every arm: `K·Σ_i (N − 1)(d_c + d_{i,s})`.
    pub fn round_comm_formula(dims: &Dimensions) -> u64 {
        let n = dims.n_nodes as u64;
        dims.d_specific
            .iter()
            .map(|&ds| (n - 1) * (dims.d_common + ds) as u64)
            .sum::<u64>()
            * dims.n_arms as u64
    }
}

impl Policy for SharedLinUcb {
    fn name(&self) -> &'static str {
        "shared"
    }

    fn play_round(
        &mut self,
        _t: usize,
        contexts: &[Context],
        reward: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Vec<Decision> {
        let decisions = contexts
            .iter()
            .enumerate()
            .map(|(i, ctx)| {
                let x = shared_embed(i, ctx, &self.dims);
                let scores: Vec<UcbScore> =
                    self.states.iter().map(|s| s.ucb(&x, self.alpha)).collect();
                let arm = argmax_lowest(&scores);
                let r = reward(i, arm);
                self.states[arm].update(&x, r);
                Decision {
                    arm,
                    radius: scores[arm].width,
                }
            })
            .collect();
        self.round_comm = Self::round_comm_formula(&self.dims);
        decisions
    }

    fn comm_scalars(&self) -> u64 {
        self.round_comm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{preset, Environment};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn zero_update_is_a_no_op() {
        let mut s = RidgeState::new(3);
        s.update(&[0.0, 0.0, 0.0], 5.0);
        assert_eq!(s, RidgeState::new(3));
    }

    #[test]
    fn single_update_closed_forms() {
        let mut s = RidgeState::new(3);
        assert_eq!(s.point(), vec![0.0; 3]);
        s.update(&e(3, 0), 1.0);
        assert_eq!(s.design(), &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.response(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.point(), vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn quad_examples() {
        let mut s = RidgeState::new(4);
        let x = [0.5, 0.5, 0.5, 0.5];
        assert!((s.quad(&x) - 1.0).abs() < 1e-15);
        assert_eq!(s.quad(&[0.0; 4]), 0.0);
        for m in 1..=20 {
            s.update(&x, 0.3);
            // Sherman–Morrison: xᵀ(I + m x xᵀ)⁻¹x = 1/(1+m) for unit x
            assert!((s.quad(&x) - 1.0 / (1.0 + m as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_specific_block_is_inert() {
        let mut s = RidgeState::new(0);
        s.update(&[], 1.0);
        assert_eq!(s.quad(&[]), 0.0);
        assert_eq!(s.predict(&[]), 0.0);
    }

    #[test]
    fn refresh_keeps_inverse_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = RidgeState::new(5);
        for _ in 0..(2 * REFRESH_INTERVAL + 7) {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();
            s.update(&x, rng.random_range(-1.0..1.0));
        }
        let direct = linalg::spd_inverse(s.design(), 5).unwrap();
        for (a, b) in s.design_inverse().iter().zip(direct) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fresh_states_tie_to_first_arm() {
        let states = vec![RidgeState::new(3); 4];
        let zero = Context::zeros(2, 1);
        assert_eq!(disjoint_select(&states, &zero, 2.0), 0);
        let unit = Context::new(vec![0.6, 0.0], vec![0.8]);
        assert_eq!(disjoint_select(&states, &unit, 2.0), 0);
        let s = states[0].ucb(&concat_context(&unit), 2.0);
        assert!((s.value() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_select_matches_exhaustive_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 4;
        for _ in 0..50 {
            let mut states = vec![RidgeState::new(d); 5];
            for s in states.iter_mut() {
                for _ in 0..rng.random_range(0..20) {
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                    s.update(&x, rng.random_range(-1.0..1.0));
                }
            }
            let ctx = Context::new(
                (0..2).map(|_| rng.random_range(-0.5..0.5)).collect(),
                (0..2).map(|_| rng.random_range(-0.5..0.5)).collect(),
            );
            let x = concat_context(&ctx);
            // oracle: invert W directly and scan
            let mut best = (0, f64::NEG_INFINITY);
            for (k, s) in states.iter().enumerate() {
                let inv = linalg::spd_inverse(s.design(), d).unwrap();
                let th = linalg::mat_vec(&inv, s.response());
                let v = linalg::dot(&x, &th) + 1.5 * linalg::quad_form(&inv, &x).sqrt();
                if v > best.1 + 1e-12 {
                    best = (k, v);
                }
            }
            assert_eq!(disjoint_select(&states, &ctx, 1.5), best.0);
        }
    }

    #[test]
    fn shared_embed_examples() {
        let dims = Dimensions::uniform(2, 2, 1, 1);
        let ctx = Context::new(vec![0.3], vec![0.4]);
        assert_eq!(shared_embed(1, &ctx, &dims), vec![0.3, 0.0, 0.4]);
        assert_eq!(shared_embed(0, &ctx, &dims), vec![0.3, 0.4, 0.0]);
        assert_eq!(shared_embed(1, &Context::zeros(1, 1), &dims), vec![0.0; 3]);
        let g = shared_embed(1, &ctx, &dims);
        assert_eq!(linalg::norm(&g), ctx.norm());
    }

    #[test]
    fn shared_select_first_round_ties() {
        let dims = Dimensions::uniform(3, 3, 2, 1);
        let states = vec![RidgeState::new(dims.d_global()); 3];
        let ctx = Context::new(vec![0.1, 0.2], vec![0.3]);
        assert_eq!(shared_select(&states, 2, &ctx, &dims, 1.0), 0);
    }

    // Step-by-step replay of the centralized loop with independently
    // inverted design matrices.
    #[test]
    fn shared_trajectory_matches_replay_oracle() {
        let mut cfg = preset("default").unwrap().with_nodes(3);
        cfg.dims = Dimensions::uniform(3, 3, 2, 1);
        cfg.context_mean_common = vec![0.0; 2];
        let env = Environment::new(cfg).unwrap();
        let dims = env.dims().clone();
        let alpha = 1.3;
        let mut policy = SharedLinUcb::new(&dims, alpha);

        let dg = dims.d_global();
        let mut w = vec![linalg::identity(dg); 3];
        let mut b = vec![vec![0.0; dg]; 3];
        for t in 1..=20 {
            let ctxs = env.sample_contexts(t);
            let mut rew = |i: usize, k: usize| {
                env.draw_reward(i, k, &ctxs[i], &mut env.noise_rng(i, t))
                    .unwrap()
            };
            let got = policy.play_round(t, &ctxs, &mut rew);
            for (i, ctx) in ctxs.iter().enumerate() {
                let mut x = vec![0.0; dg];
                x[0] = ctx.common[0];
                x[1] = ctx.common[1];
                x[2 + i] = ctx.specific[0];
                let mut best = (0, f64::NEG_INFINITY);
                for k in 0..3 {
                    let inv = linalg::spd_inverse(&w[k], dg).unwrap();
                    let v = linalg::dot(&x, &linalg::mat_vec(&inv, &b[k]))
                        + alpha * linalg::quad_form(&inv, &x).sqrt();
                    if v > best.1 + 1e-12 {
                        best = (k, v);
                    }
                }
                assert_eq!(got[i].arm, best.0, "t={t} node={i}");
                let r = rew(i, best.0);
                for p in 0..dg {
                    b[best.0][p] += r * x[p];
                    for q in 0..dg {
                        w[best.0][p * dg + q] += x[p] * x[q];
                    }
                }
            }
        }
    }

    #[test]
    fn shared_comm_formula() {
        let dims = Dimensions::uniform(3, 2, 2, 1);
        assert_eq!(SharedLinUcb::round_comm_formula(&dims), 2 * 3 * 2 * 3);
        assert_eq!(
            SharedLinUcb::round_comm_formula(&Dimensions::uniform(1, 4, 3, 3)),
            0
        );
    }

    #[test]
    fn default_alpha() {
        assert!((default_alpha_ridge(1000) - (1.0 + (2000f64.ln() / 2.0).sqrt())).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn quad_never_increases(
            xs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..30),
            probe in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let mut s = RidgeState::new(3);
            let mut prev = s.quad(&probe);
            prop_assert!(prev <= linalg::dot(&probe, &probe) + 1e-12);
            for x in &xs {
                s.update(x, 0.5);
                let q = s.quad(&probe);
                prop_assert!(q <= prev + 1e-12);
                prop_assert!(q >= 0.0);
                prev = q;
            }
        }
    }
}
