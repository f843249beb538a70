//! NetLinUCB: local block ridge estimates, refined by weighted aggregation of
//! neighbors' common-block summaries.
//!
//! A node never receives another node's design matrix. To score arm `k` it
//! broadcasts its common context `x_c` to its component and each neighbor `j`
//! answers with two scalars, `x_cᵀ(W_{j,c})⁻¹b_{j,c}` and
//! `x_cᵀ(W_{j,c})⁻¹x_c`. The weighted sum of the first gives the common point
//! estimate; the squared-weight sum of the second gives the common part of
//! the confidence radius.

use crate::domain::{Context, Dimensions, Topology};
use crate::policy::{argmax_lowest, CommLedger, Decision, Policy, UcbScore};
use crate::ridge::{block_ucb, RidgeBlockState};
use crate::weights::{ArmCounts, WeightMatrixSet};

/// Reply of node `from_node` to a summary request for `arm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonSummary {
    pub from_node: usize,
    pub arm: usize,
    pub dot: f64,
    pub quad: f64,
}

#[derive(Debug, Clone)]
pub struct NetLinUcb {
    dims: Dimensions,
    topology: Topology,
    alpha: f64,
    // blocks[node][arm]
    blocks: Vec<Vec<RidgeBlockState>>,
    counts: ArmCounts,
    weights: WeightMatrixSet,
    round_comm: u64,
}

impl NetLinUcb {
    pub fn new(dims: &Dimensions, topology: Topology, alpha: f64, rho: f64, beta: f64) -> Self {
        assert_eq!(topology.n_nodes(), dims.n_nodes);
        let blocks = (0..dims.n_nodes)
            .map(|i| vec![RidgeBlockState::new(dims.d_common, dims.d_specific[i]); dims.n_arms])
            .collect();
        Self {
            dims: dims.clone(),
            topology,
            alpha,
            blocks,
            counts: ArmCounts::new(dims.n_nodes, dims.n_arms),
            weights: WeightMatrixSet::identity(dims.n_nodes, dims.n_arms, rho, beta),
            round_comm: 0,
        }
    }

    pub fn block(&self, node: usize, arm: usize) -> &RidgeBlockState {
        &self.blocks[node][arm]
    }

    pub fn block_mut(&mut self, node: usize, arm: usize) -> &mut RidgeBlockState {
        &mut self.blocks[node][arm]
    }

    pub fn counts(&self) -> &ArmCounts {
        &self.counts
    }

    pub fn weight_set(&self) -> &WeightMatrixSet {
        &self.weights
    }

    pub fn weight_set_mut(&mut self) -> &mut WeightMatrixSet {
        &mut self.weights
    }

    /// Closed-form round cost: `K·Σ_components s(s−1)(d_c + 2)`.
    pub fn round_comm_formula(dims: &Dimensions, topology: &Topology) -> u64 {
        dims.n_arms as u64 * topology.ordered_pairs() * (dims.d_common as u64 + 2)
    }

    /// Asks every member of node `i`'s component (itself included) for its
    /// summary of arm `k` at `x_c`. Each cross-node exchange costs `d_c`
    /// scalars for the broadcast and two for the reply.
    pub fn request_summaries(
        &self,
        i: usize,
        ctx_common: &[f64],
        arm: usize,
        ledger: &mut CommLedger,
    ) -> Vec<CommonSummary> {
        self.topology
            .neighbors(i)
            .iter()
            .map(|&j| {
                if j != i {
                    ledger.add(ctx_common.len() as u64 + 2);
                }
                let common = &self.blocks[j][arm].common;
                CommonSummary {
                    from_node: j,
                    arm,
                    dot: common.predict(ctx_common),
                    quad: common.quad(ctx_common),
                }
            })
            .collect()
    }

    /// `Σ_j ω_ji·dot_j + x_sᵀθ̂_{i,s} + α√(Σ_j ω_ji²·quad_j + x_sᵀ(W_{i,s})⁻¹x_s)`.
    pub fn netlin_ucb(
        &self,
        i: usize,
        ctx: &Context,
        arm: usize,
        summaries: &[CommonSummary],
    ) -> UcbScore {
        let mut common_point = 0.0;
        let mut common_quad = 0.0;
        for s in summaries {
            debug_assert_eq!(s.arm, arm);
            let w = self.weights.weight(arm, s.from_node, i);
            common_point += w * s.dot;
            common_quad += w * w * s.quad;
        }
        let specific = &self.blocks[i][arm].specific;
        block_ucb(
            common_point,
            specific.predict(&ctx.specific),
            common_quad,
            specific.quad(&ctx.specific),
            self.alpha,
        )
    }

    /// All arm scores of node `i` against the current state.
    pub fn scores(&self, i: usize, ctx: &Context, ledger: &mut CommLedger) -> Vec<UcbScore> {
        (0..self.dims.n_arms)
            .map(|k| {
                let summaries = self.request_summaries(i, &ctx.common, k, ledger);
                self.netlin_ucb(i, ctx, k, &summaries)
            })
            .collect()
    }

    /// Refreshes `Ω` from the current counts and contexts.
    pub fn update_weights(&mut self, contexts: &[Context]) {
        self.weights.update(&self.counts, contexts, &self.topology);
    }
}

impl Policy for NetLinUcb {
    fn name(&self) -> &'static str {
        "netlinucb"
    }

    fn play_round(
        &mut self,
        _t: usize,
        contexts: &[Context],
        reward: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Vec<Decision> {
        self.update_weights(contexts);

        // every node decides against the start-of-round snapshot
        let mut ledger = CommLedger::default();
        let decisions: Vec<Decision> = contexts
            .iter()
            .enumerate()
            .map(|(i, ctx)| {
                let scores = self.scores(i, ctx, &mut ledger);
                let arm = argmax_lowest(&scores);
                Decision {
                    arm,
                    radius: scores[arm].width,
                }
            })
            .collect();

        for (i, (ctx, d)) in contexts.iter().zip(&decisions).enumerate() {
            let r = reward(i, d.arm);
            self.blocks[i][d.arm].update(ctx, r);
            self.counts.increment(i, d.arm);
        }
        self.round_comm = ledger.scalars;
        decisions
    }

    fn comm_scalars(&self) -> u64 {
        self.round_comm
    }

    fn weights(&self) -> Option<&WeightMatrixSet> {
        Some(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::ridge::DisjointLinUcb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filled(dims: &Dimensions, topo: Topology, seed: u64) -> NetLinUcb {
        let mut p = NetLinUcb::new(dims, topo, 1.7, 0.9, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..dims.n_nodes {
            for k in 0..dims.n_arms {
                for _ in 0..rng.random_range(1..15) {
                    let ctx = Context::new(
                        (0..dims.d_common)
                            .map(|_| rng.random_range(-0.5..0.5))
                            .collect(),
                        (0..dims.d_specific[i])
                            .map(|_| rng.random_range(-0.5..0.5))
                            .collect(),
                    );
                    p.block_mut(i, k).update(&ctx, rng.random_range(-1.0..1.0));
                }
            }
        }
        p
    }

    #[test]
    fn singleton_component_gets_only_its_own_summary() {
        let dims = Dimensions::uniform(3, 2, 2, 1);
        let p = NetLinUcb::new(&dims, Topology::singletons(3), 1.0, 0.9, 0.5);
        let mut ledger = CommLedger::default();
        let s = p.request_summaries(1, &[0.6, 0.8], 0, &mut ledger);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].from_node, 1);
        assert_eq!(ledger.scalars, 0);
    }

    #[test]
    fn fresh_summaries_are_trivial() {
        let dims = Dimensions::uniform(4, 2, 2, 1);
        let p = NetLinUcb::new(&dims, Topology::fully_connected(4), 1.0, 0.9, 0.5);
        let mut ledger = CommLedger::default();
        let s = p.request_summaries(0, &[0.6, 0.8], 1, &mut ledger);
        assert_eq!(s.len(), 4);
        for x in &s {
            assert_eq!(x.dot, 0.0);
            assert!((x.quad - 1.0).abs() < 1e-15);
        }
        assert_eq!(ledger.scalars, 3 * (2 + 2));
    }

    #[test]
    fn summaries_match_direct_recomputation() {
        let dims = Dimensions::uniform(4, 3, 3, 2);
        let p = filled(&dims, Topology::from_sizes(&[3, 1]).unwrap(), 5);
        let xc = [0.2, -0.4, 0.1];
        let mut ledger = CommLedger::default();
        for k in 0..3 {
            for s in p.request_summaries(2, &xc, k, &mut ledger) {
                let c = &p.block(s.from_node, k).common;
                let inv = linalg::spd_inverse(c.design(), 3).unwrap();
                let dot = linalg::dot(&xc, &linalg::mat_vec(&inv, c.response()));
                let quad = linalg::quad_form(&inv, &xc);
                assert!((s.dot - dot).abs() < 1e-10);
                assert!((s.quad - quad).abs() < 1e-10);
                assert!(s.quad >= 0.0 && s.quad <= linalg::dot(&xc, &xc));
            }
        }
    }

    #[test]
    fn identity_weights_reduce_to_block_linucb() {
        let dims = Dimensions::uniform(3, 3, 2, 2);
        let p = filled(&dims, Topology::fully_connected(3), 8);
        // Ω starts at the identity
        let ctx = Context::new(vec![0.3, -0.1], vec![0.2, 0.4]);
        let mut ledger = CommLedger::default();
        for k in 0..3 {
            let s = p.request_summaries(1, &ctx.common, k, &mut ledger);
            let net = p.netlin_ucb(1, &ctx, k, &s);
            let local = p.block(1, k).ucb(&ctx, 1.7);
            assert_eq!(net, local);
        }
    }

    #[test]
    fn uniform_weights_shrink_radius_by_sqrt_n() {
        for n in [1usize, 2, 4, 9] {
            let dims = Dimensions::uniform(n, 2, 2, 1);
            let mut p = NetLinUcb::new(&dims, Topology::fully_connected(n), 2.5, 0.9, 0.5);
            p.weight_set_mut()
                .set_matrix(0, vec![1.0 / n as f64; n * n]);
            let ctx = Context::new(vec![0.6, 0.8], vec![0.0]);
            let mut ledger = CommLedger::default();
            let s = p.request_summaries(0, &ctx.common, 0, &mut ledger);
            let score = p.netlin_ucb(0, &ctx, 0, &s);
            assert_eq!(score.estimate, 0.0);
            assert!((score.radius - 2.5 / (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    // Two nodes with one observation each, evaluated from the closed forms
    // (I + x xᵀ)⁻¹ = I − x xᵀ/(1 + ‖x‖²).
    #[test]
    fn two_node_hand_example() {
        let dims = Dimensions::uniform(2, 2, 2, 1);
        let mut p = NetLinUcb::new(&dims, Topology::fully_connected(2), 1.0, 0.0, 0.5);
        let obs = [
            (Context::new(vec![1.0, 0.0], vec![0.5]), 1.0),
            (Context::new(vec![0.0, 1.0], vec![-0.5]), 0.5),
        ];
        for (i, (c, r)) in obs.iter().enumerate() {
            p.block_mut(i, 0).update(c, *r);
        }
        p.weight_set_mut().set_matrix(0, vec![0.75, 0.25, 0.4, 0.6]);
        let ctx = Context::new(vec![0.6, 0.8], vec![1.0]);
        let mut ledger = CommLedger::default();
        let s = p.request_summaries(0, &ctx.common, 0, &mut ledger);
        let score = p.netlin_ucb(0, &ctx, 0, &s);

        // node 0 common: W = diag(2, 1), b = (1, 0) → θ = (0.5, 0), quad = 0.36/2 + 0.64
        // node 1 common: W = diag(1, 2), b = (0, 0.5) → θ = (0, 0.25), quad = 0.36 + 0.32
        // node 0 specific: W = 1.25, b = 0.5 → θ = 0.4, quad = 0.8
        let dot0 = 0.6 * 0.5;
        let dot1 = 0.8 * 0.25;
        let q0 = 0.18 + 0.64;
        let q1 = 0.36 + 0.32;
        let est = 0.75 * dot0 + 0.25 * dot1 + 0.4;
        let rad = (0.75f64 * 0.75 * q0 + 0.25 * 0.25 * q1 + 0.8).sqrt();
        assert!((score.estimate - est).abs() < 1e-14);
        assert!((score.radius - rad).abs() < 1e-14);
    }

    #[test]
    fn first_round_picks_first_arm_everywhere() {
        let dims = Dimensions::uniform(4, 3, 2, 2);
        let mut p = NetLinUcb::new(&dims, Topology::fully_connected(4), 2.0, 0.9, 0.5);
        let ctxs: Vec<Context> = (0..4)
            .map(|i| Context::new(vec![0.1 * i as f64, 0.3], vec![0.2, -0.1]))
            .collect();
        let d = p.play_round(1, &ctxs, &mut |_, _| 0.5);
        assert!(d.iter().all(|d| d.arm == 0));
        assert_eq!(
            p.comm_scalars(),
            NetLinUcb::round_comm_formula(&dims, &Topology::fully_connected(4))
        );
        assert_eq!(p.counts().get(2, 0), 2);
        assert_eq!(p.counts().get(2, 1), 1);
    }

    #[test]
    fn nodes_only_write_their_own_blocks() {
        let dims = Dimensions::uniform(3, 2, 1, 1);
        let mut p = NetLinUcb::new(&dims, Topology::fully_connected(3), 1.0, 0.5, 0.5);
        let ctxs = vec![Context::new(vec![0.5], vec![0.5]); 3];
        p.play_round(1, &ctxs, &mut |_, _| 1.0);
        for i in 0..3 {
            // each node updated arm 0 exactly once
            assert_eq!(p.block(i, 0).common.design(), &[1.25]);
            assert_eq!(p.block(i, 1).common.design(), &[1.0]);
        }
    }

    #[test]
    fn singleton_network_replays_split_disjoint() {
        let dims = Dimensions::uniform(3, 3, 2, 2);
        let mut net = NetLinUcb::new(&dims, Topology::singletons(3), 1.9, 0.9, 0.5);
        let mut dis = DisjointLinUcb::block_split(&dims, 1.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..=100 {
            let ctxs: Vec<Context> = (0..3)
                .map(|_| {
                    Context::new(
                        (0..2).map(|_| rng.random_range(-0.5..0.5)).collect(),
                        (0..2).map(|_| rng.random_range(-0.5..0.5)).collect(),
                    )
                })
                .collect();
            let r = |i: usize, k: usize| ((i * 7 + k * 3 + t) % 5) as f64 * 0.1;
            let a = net.play_round(t, &ctxs, &mut |i, k| r(i, k));
            let b = dis.play_round(t, &ctxs, &mut |i, k| r(i, k));
            assert_eq!(a, b);
            assert_eq!(net.comm_scalars(), 0);
        }
    }
}
