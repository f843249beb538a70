//! The interface shared by all four policies.

use crate::domain::Context;
use crate::weights::WeightMatrixSet;

/// A node's choice for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub arm: usize,
    /// Confidence radius `√(quadratic form)` of the chosen arm, without the
    /// exploration multiplier.
    pub radius: f64,
}

/// Upper confidence bound split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbScore {
    pub estimate: f64,
    /// Exploration bonus, `α·width`.
    pub radius: f64,
    /// `√(quadratic form)`.
    pub width: f64,
}

impl UcbScore {
    pub fn value(&self) -> f64 {
        self.estimate + self.radius
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[UcbScore]) -> usize {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate().skip(1) {
        if s.value() > scores[best].value() {
            best = k;
        }
    }
    best
}

/// Running count of scalars exchanged between distinct nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommLedger {
    pub scalars: u64,
}

impl CommLedger {
    pub fn add(&mut self, scalars: u64) {
        self.scalars += scalars;
    }
}

/// A decentralized bandit policy driven one synchronous round at a time.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Plays round `t` for every node. `reward(node, arm)` returns the
    /// realized reward of pulling `arm` at `node`.
    fn play_round(
        &mut self,
        t: usize,
        contexts: &[Context],
        reward: &mut dyn FnMut(usize, usize) -> f64,
    ) -> Vec<Decision>;

    /// Cross-node scalars exchanged during the most recent round.
    fn comm_scalars(&self) -> u64;

    /// The adaptive weights, for policies that keep them.
    fn weights(&self) -> Option<&WeightMatrixSet> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> UcbScore {
        UcbScore {
            estimate: v,
            radius: 0.0,
            width: 0.0,
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax_lowest(&[s(1.0), s(1.0), s(0.5)]), 0);
        assert_eq!(argmax_lowest(&[s(0.0), s(2.0), s(2.0)]), 1);
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let base = [s(0.3), s(-0.1), s(0.7), s(0.7)];
        let shifted: Vec<UcbScore> = base.iter().map(|x| s(x.estimate + 5.0)).collect();
        assert_eq!(argmax_lowest(&base), argmax_lowest(&shifted));
    }
}
