//! Types shared by the environment and every policy.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Network size, arm count and per-node feature dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub n_nodes: usize,
    pub n_arms: usize,
    pub d_common: usize,
    /// Node-specific dimension for each node, length `n_nodes`.
    pub d_specific: Vec<usize>,
}

impl Dimensions {
    pub fn uniform(n_nodes: usize, n_arms: usize, d_common: usize, d_specific: usize) -> Self {
        Self {
            n_nodes,
            n_arms,
            d_common,
            d_specific: vec![d_specific; n_nodes],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 1 {
            return Err(invalid("dims.n_nodes", "must be at least 1"));
        }
        if self.n_arms < 2 {
            return Err(invalid("dims.n_arms", "must be at least 2"));
        }
        if self.d_common < 1 {
            return Err(invalid("dims.d_common", "must be at least 1"));
        }
        if self.d_specific.len() != self.n_nodes {
            return Err(invalid(
                "dims.d_specific",
                format!(
                    "has {} entries for {} nodes",
                    self.d_specific.len(),
                    self.n_nodes
                ),
            ));
        }
        Ok(())
    }

    /// Full context dimension `d_c + d_{i,s}` of node `i`.
    pub fn d_full(&self, node: usize) -> usize {
        self.d_common + self.d_specific[node]
    }

    /// Dimension of the block-sparse global embedding, `d_c + Σ_i d_{i,s}`.
    pub fn d_global(&self) -> usize {
        self.d_common + self.d_specific.iter().sum::<usize>()
    }

    /// Offset of node `i`'s specific block inside the global embedding.
    pub fn global_offset(&self, node: usize) -> usize {
        self.d_common + self.d_specific[..node].iter().sum::<usize>()
    }
}

/// A node's context for one round, kept split into its common and
/// node-specific blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub common: Vec<f64>,
    pub specific: Vec<f64>,
}

impl Context {
    pub fn new(common: Vec<f64>, specific: Vec<f64>) -> Self {
        Self { common, specific }
    }

    pub fn zeros(d_common: usize, d_specific: usize) -> Self {
        Self::new(vec![0.0; d_common], vec![0.0; d_specific])
    }

    /// Splits a full vector at `d_common`.
    pub fn split(full: &[f64], d_common: usize) -> Result<Self> {
        if full.len() < d_common {
            return Err(Error::DimensionMismatch {
                expected: d_common,
                got: full.len(),
            });
        }
        let (c, s) = full.split_at(d_common);
        Ok(Self::new(c.to_vec(), s.to_vec()))
    }

    pub fn dim(&self) -> usize {
        self.common.len() + self.specific.len()
    }

    pub fn norm(&self) -> f64 {
        (linalg::dot(&self.common, &self.common) + linalg::dot(&self.specific, &self.specific))
            .sqrt()
    }
}

/// Common block followed by the specific block.
pub fn concat_context(ctx: &Context) -> Vec<f64> {
    let mut out = Vec::with_capacity(ctx.dim());
    out.extend_from_slice(&ctx.common);
    out.extend_from_slice(&ctx.specific);
    out
}

/// Projects `v` radially onto the closed unit ball: `v / max(1, ‖v‖)`.
pub fn clamp_to_unit_ball(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = linalg::norm(v);
    if n <= 1.0 {
        Ok(v.to_vec())
    } else {
        Ok(v.iter().map(|x| x / n).collect())
    }
}

/// Disjoint union of fully connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds consecutive components with the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::Topology {
                label: format!("{sizes:?}"),
                reason: "component sizes must be positive".into(),
            });
        }
        let mut component_of = Vec::new();
        let mut components = Vec::with_capacity(sizes.len());
        let mut next = 0;
        for (c, &s) in sizes.iter().enumerate() {
            components.push((next..next + s).collect());
            component_of.extend(std::iter::repeat_n(c, s));
            next += s;
        }
        Ok(Self {
            component_of,
            components,
        })
    }

    pub fn fully_connected(n: usize) -> Self {
        Self::from_sizes(&[n]).expect("n >= 1")
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_sizes(&vec![1; n]).expect("n >= 1")
    }

    /// Parses a sub-network label for a network of `n` nodes.
    ///
    /// `"SxC"` (or `"S*C"`) is `C` fully connected components of `S` nodes
    /// each, so `"1x12"` is twelve isolated nodes and `"6x2"` two cliques of
    /// six. A bare `"S"` is a single clique and must equal `n`. `"full"` and
    /// `"isolated"` adapt to any `n`.
    pub fn parse(label: &str, n: usize) -> Result<Self> {
        let err = |reason: String| Error::Topology {
            label: label.to_string(),
            reason,
        };
        let trimmed = label.trim();
        match trimmed {
            "full" => return Ok(Self::fully_connected(n.max(1))),
            "isolated" => return Ok(Self::singletons(n.max(1))),
            _ => {}
        }
        let parts: Vec<&str> = trimmed.split(['x', 'X', '*']).collect();
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(e.to_string()))?;
        let (size, count) = match nums.as_slice() {
            [s] => (*s, 1),
            [s, c] => (*s, *c),
            _ => return Err(err("expected `S` or `SxC`".into())),
        };
        if size == 0 || count == 0 {
            return Err(err("sizes must be positive".into()));
        }
        if size * count != n {
            return Err(err(format!(
                "covers {} nodes, network has {n}",
                size * count
            )));
        }
        Self::from_sizes(&vec![size; count])
    }

    pub fn n_nodes(&self) -> usize {
        self.component_of.len()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component_of[node]
    }

    /// Members of the component containing `node`, including `node` itself.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.components[self.component_of[node]]
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        self.component_of[a] == self.component_of[b]
    }

    /// `Σ_components s·(s−1)`: the number of ordered cross-node pairs.
    pub fn ordered_pairs(&self) -> u64 {
        self.components
            .iter()
            .map(|c| (c.len() * (c.len() - 1)) as u64)
            .sum()
    }
}

/// What happened at one node in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub node: usize,
    pub chosen_arm: usize,
    pub optimal_arm: usize,
    pub reward: f64,
    pub expected_reward_chosen: f64,
    pub expected_reward_optimal: f64,
    /// Confidence width attached to the chosen arm.
    pub radius: f64,
}

impl RoundRecord {
    pub fn regret(&self) -> f64 {
        self.expected_reward_optimal - self.expected_reward_chosen
    }
}
