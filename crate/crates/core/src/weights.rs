//! Per-arm adaptive influence matrices `Ω^k`.
//!
//! Entry `(j, i)` of `Ω^k` is the influence of node `j` on node `i`'s
//! estimate of the common parameter for arm `k`. Each round the matrices are
//! rebuilt from arm-selection and context similarity, normalized column by
//! column inside each topology component, and blended into the previous
//! value with an exponential moving average.

use crate::domain::{Context, Topology};
use crate::linalg;

/// Selection counts `n_i^k`, initialized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCounts {
    n_arms: usize,
    counts: Vec<u64>,
}

impl ArmCounts {
    pub fn new(n_nodes: usize, n_arms: usize) -> Self {
        Self {
            n_arms,
            counts: vec![1; n_nodes * n_arms],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        assert!(
            rows.iter().flatten().all(|&c| c >= 1),
            "counts must be positive"
        );
        let n_arms = rows.first().map_or(0, Vec::len);
        Self {
            n_arms,
            counts: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.counts.len() / self.n_arms
    }

    pub fn get(&self, node: usize, arm: usize) -> u64 {
        self.counts[node * self.n_arms + arm]
    }

    pub fn increment(&mut self, node: usize, arm: usize) {
        self.counts[node * self.n_arms + arm] += 1;
    }

    /// `n^k = Σ_q n_q^k`.
    pub fn arm_total(&self, arm: usize) -> u64 {
        (0..self.n_nodes()).map(|q| self.get(q, arm)).sum()
    }
}

/// `n_i^k n_j^k / (Σ_q n_q^k)²`.
pub fn arm_selection_similarity(counts: &ArmCounts, arm: usize, i: usize, j: usize) -> f64 {
    let total = counts.arm_total(arm) as f64;
    (counts.get(i, arm) as f64 * counts.get(j, arm) as f64) / (total * total)
}

/// Cosine similarity of two common blocks mapped to `[0, 1]` by `(1 + cos)/2`.
/// Zero if either vector is zero.
pub fn context_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (linalg::norm(a), linalg::norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let cos = (linalg::dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    0.5 * (1.0 + cos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrixSet {
    n_nodes: usize,
    rho: f64,
    /// Weight on the arm-selection term; the context term gets `1 − beta`.
    beta: f64,
    // One matrix per arm, column-major: `m[i * n + j] = ω_{ji}`.
    matrices: Vec<Vec<f64>>,
}

impl WeightMatrixSet {
    /// Identity matrices for every arm.
    pub fn identity(n_nodes: usize, n_arms: usize, rho: f64, beta: f64) -> Self {
        assert!((0.0..=1.0).contains(&rho), "rho must lie in [0, 1]");
        assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1]");
        Self {
            n_nodes,
            rho,
            beta,
            matrices: vec![linalg::identity(n_nodes); n_arms],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_arms(&self) -> usize {
        self.matrices.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `ω_{ji}^k`, the influence of node `j` on node `i`.
    pub fn weight(&self, arm: usize, j: usize, i: usize) -> f64 {
        self.matrices[arm][i * self.n_nodes + j]
    }

    /// Column `i` of `Ω^k`: the weights node `i` puts on every node.
    pub fn column(&self, arm: usize, i: usize) -> &[f64] {
        &self.matrices[arm][i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    /// Overwrites `Ω^k` from a column-major buffer. Used to pin weights in
    /// tests and experiments.
    pub fn set_matrix(&mut self, arm: usize, column_major: Vec<f64>) {
        assert_eq!(column_major.len(), self.n_nodes * self.n_nodes);
        self.matrices[arm] = column_major;
    }

    /// Rebuilds every `Ω^k` from the current counts and common contexts and
    /// blends it in: `Ω ← ρ·Ω_old + (1 − ρ)·Ω_new`.
    pub fn update(&mut self, counts: &ArmCounts, contexts: &[Context], topology: &Topology) {
        let n = self.n_nodes;
        debug_assert_eq!(contexts.len(), n);
        debug_assert_eq!(topology.n_nodes(), n);

        // context term does not depend on the arm
        let mut ctx_sim = vec![0.0; n * n];
        for i in 0..n {
            for &j in topology.neighbors(i) {
                ctx_sim[i * n + j] = context_similarity(&contexts[j].common, &contexts[i].common);
            }
        }

        let mut fresh = vec![0.0; n];
        for (arm, m) in self.matrices.iter_mut().enumerate() {
            let total = counts.arm_total(arm) as f64;
            let denom = total * total;
            for i in 0..n {
                fresh.iter_mut().for_each(|w| *w = 0.0);
                let ni = counts.get(i, arm) as f64;
                let mut sum = 0.0;
                for &j in topology.neighbors(i) {
                    let sel = ni * counts.get(j, arm) as f64 / denom;
                    let raw = self.beta * sel + (1.0 - self.beta) * ctx_sim[i * n + j];
                    fresh[j] = raw;
                    sum += raw;
                }
                if sum > 0.0 {
                    fresh.iter_mut().for_each(|w| *w /= sum);
                } else {
                    fresh[i] = 1.0;
                }
                let col = &mut m[i * n..(i + 1) * n];
                for (old, new) in col.iter_mut().zip(&fresh) {
                    *old += (1.0 - self.rho) * (new - *old);
                }
            }
        }
    }

    /// Largest deviation of any column sum from one, across all arms.
    pub fn max_column_sum_error(&self) -> f64 {
        let n = self.n_nodes;
        self.matrices
            .iter()
            .flat_map(|m| {
                m.chunks_exact(n)
                    .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Checks non-negativity, unit column sums (to `tol`) and the topology mask.
    pub fn check_invariants(&self, topology: &Topology, tol: f64) -> Result<(), String> {
        let n = self.n_nodes;
        for (arm, m) in self.matrices.iter().enumerate() {
            for i in 0..n {
                let col = &m[i * n..(i + 1) * n];
                let s: f64 = col.iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(format!("arm {arm} column {i} sums to {s}"));
                }
                for (j, &w) in col.iter().enumerate() {
                    if w < 0.0 {
                        return Err(format!("arm {arm} entry ({j},{i}) = {w} is negative"));
                    }
                    if !topology.same_component(i, j) && w != 0.0 {
                        return Err(format!(
                            "arm {arm} entry ({j},{i}) = {w} crosses components"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Ω^k` in row-major order (`ω_{ji}` at `j * n + i`).
    pub fn row_major(&self, arm: usize) -> Vec<f64> {
        let n = self.n_nodes;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.weight(arm, j, i);
            }
        }
        out
    }
}
