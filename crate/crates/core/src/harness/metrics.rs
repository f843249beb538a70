//! Regret series and the derived summary metrics.

use crate::domain::RoundRecord;
use crate::error::{Error, Result};

/// Per-round network series for one replication. Index `t - 1` holds round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    seed: u64,
    n_nodes: usize,
    inst: Vec<f64>,
    cum: Vec<f64>,
    comm: Vec<u64>,
    radius: Vec<f64>,
}

impl RegretTrace {
    pub fn new(seed: u64, n_nodes: usize) -> Self {
        Self {
            seed,
            n_nodes,
            inst: Vec::new(),
            cum: Vec::new(),
            comm: Vec::new(),
            radius: Vec::new(),
        }
    }

    /// Builds a trace from per-round network regret, comm counts and summed
    /// chosen-arm radii.
    pub fn from_rounds(
        seed: u64,
        n_nodes: usize,
        inst: Vec<f64>,
        comm: Vec<u64>,
        radius: Vec<f64>,
    ) -> Result<Self> {
        if comm.len() != inst.len() || radius.len() != inst.len() {
            return Err(Error::Trace("series lengths differ".into()));
        }
        let mut trace = Self::new(seed, n_nodes);
        for ((r, c), w) in inst.into_iter().zip(comm).zip(radius) {
            trace.push(r, c, w);
        }
        Ok(trace)
    }

    fn push(&mut self, inst: f64, comm: u64, radius: f64) {
        let prev = self.cum.last().copied().unwrap_or(0.0);
        self.inst.push(inst);
        self.cum.push(prev + inst);
        self.comm.push(comm);
        self.radius.push(radius);
    }

    /// Appends one round; records must be in node order.
    pub fn push_round(&mut self, records: &[RoundRecord], comm: u64) {
        let inst = records.iter().fold(0.0, |acc, r| acc + r.regret());
        let radius = records.iter().fold(0.0, |acc, r| acc + r.radius);
        self.push(inst, comm, radius);
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn horizon(&self) -> usize {
        self.inst.len()
    }

    pub fn instantaneous(&self) -> &[f64] {
        &self.inst
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn comm(&self) -> &[u64] {
        &self.comm
    }

    pub fn radius_sums(&self) -> &[f64] {
        &self.radius
    }

    /// R(t); zero for t = 0.
    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cum[t - 1]
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.regret_at(self.horizon())
    }

    /// R(T)/(N·T).
    pub fn per_node_regret(&self) -> f64 {
        self.final_regret() / (self.n_nodes * self.horizon()) as f64
    }

    pub fn comm_total(&self) -> u64 {
        self.comm.iter().sum()
    }
}

/// `(t, R(t)/t)` for every round.
pub fn time_average_curve(trace: &RegretTrace) -> Vec<(usize, f64)> {
    trace
        .cumulative()
        .iter()
        .enumerate()
        .map(|(i, &r)| (i + 1, r / (i + 1) as f64))
        .collect()
}

/// `(N, mean R(T)/(N·T))` per network size, sorted by N. All traces must
/// share a horizon.
pub fn per_node_average(traces: &[RegretTrace]) -> Result<Vec<(usize, f64)>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let horizon = first.horizon();
    let mut groups: Vec<(usize, f64, usize)> = Vec::new();
    for tr in traces {
        if tr.horizon() != horizon {
            return Err(Error::HorizonMismatch(horizon, tr.horizon()));
        }
        match groups.iter_mut().find(|g| g.0 == tr.n_nodes()) {
            Some(g) => {
                g.1 += tr.per_node_regret();
                g.2 += 1;
            }
            None => groups.push((tr.n_nodes(), tr.per_node_regret(), 1)),
        }
    }
    groups.sort_by_key(|g| g.0);
    Ok(groups
        .into_iter()
        .map(|(n, s, c)| (n, s / c as f64))
        .collect())
}

/// Mean chosen-arm radius over every node and round of the given runs.
pub fn mean_radius(traces: &[RegretTrace]) -> f64 {
    let (sum, count) = traces.iter().fold((0.0, 0usize), |(s, c), tr| {
        (
            s + tr.radius_sums().iter().sum::<f64>(),
            c + tr.n_nodes() * tr.horizon(),
        )
    });
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Percentage reduction of the mean chosen-arm radius relative to the
/// baseline runs.
pub fn radius_reduction(policy: &[RegretTrace], baseline: &[RegretTrace]) -> f64 {
    let base = mean_radius(baseline);
    if base == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 - mean_radius(policy) / base)
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
