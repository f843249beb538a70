//! Grid execution and the summary tables.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::io::{fmt_f64, write_trace};
use super::metrics::{mean_radius, mean_std, per_node_average, time_average_curve, RegretTrace};
use super::{
    default_horizon, default_seeds, run_replication, InstanceSpec, PolicyKind, PolicyParams,
    Replication, RunConfig,
};

/// Cross product of policies × topologies × node counts, each over every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default = "all_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default = "default_topologies")]
    pub topologies: Vec<String>,
    /// Network sizes; empty keeps the instance's own size.
    #[serde(default)]
    pub nodes: Vec<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: PolicyParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Also write one trace CSV per (policy, topology, size, seed).
    #[serde(default)]
    pub write_traces: bool,
}

fn all_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}

fn default_topologies() -> Vec<String> {
    vec!["full".into()]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::default(),
            policies: all_policies(),
            topologies: default_topologies(),
            nodes: Vec::new(),
            horizon: default_horizon(),
            seeds: default_seeds(),
            params: PolicyParams::default(),
            output_dir: None,
            write_traces: false,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// One run configuration per grid cell.
    pub fn cells(&self) -> Result<Vec<RunConfig>> {
        if self.policies.is_empty() {
            return Err(invalid("policies", "grid needs at least one policy"));
        }
        if self.topologies.is_empty() {
            return Err(invalid("topologies", "grid needs at least one topology"));
        }
        let sizes: Vec<Option<usize>> = if self.nodes.is_empty() {
            vec![self.instance.n_nodes]
        } else {
            self.nodes.iter().map(|&n| Some(n)).collect()
        };
        let mut cells = Vec::new();
        for &policy in &self.policies {
            for topology in &self.topologies {
                for &n in &sizes {
                    cells.push(RunConfig {
                        instance: InstanceSpec {
                            n_nodes: n,
                            ..self.instance.clone()
                        },
                        policy,
                        topology: topology.clone(),
                        horizon: self.horizon,
                        seeds: self.seeds.clone(),
                        params: self.params.clone(),
                        output_dir: self.output_dir.clone(),
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// Result of one grid cell: every seed's replication, or the first failure.
#[derive(Debug)]
pub struct CellOutcome {
    pub config: RunConfig,
    pub result: Result<Vec<Replication>>,
}

impl CellOutcome {
    pub fn n_nodes(&self) -> Option<usize> {
        self.config
            .resolve()
            .ok()
            .map(|(inst, _)| inst.dims.n_nodes)
    }

    pub fn traces(&self) -> Vec<RegretTrace> {
        match &self.result {
            Ok(reps) => reps.iter().map(|r| r.trace.clone()).collect(),
            Err(_) => Vec::new(),
        }
    }
}

/// Runs every (cell, seed) pair in parallel. Results are gathered in grid
/// order, so they do not depend on scheduling.
pub fn run_cells(cells: Vec<RunConfig>) -> Vec<CellOutcome> {
    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| cfg.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<Result<Replication>> = jobs
        .par_iter()
        .map(|&(c, seed)| run_replication(&cells[c], seed))
        .collect();

    let mut results = results.into_iter();
    cells
        .into_iter()
        .map(|config| {
            let reps: Vec<Result<Replication>> =
                results.by_ref().take(config.seeds.len()).collect();
            CellOutcome {
                result: reps.into_iter().collect(),
                config,
            }
        })
        .collect()
}

pub fn sweep(cfg: &SweepConfig) -> Result<Vec<CellOutcome>> {
    Ok(run_cells(cfg.cells()?))
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "policy",
    "topology",
    "n_nodes",
    "horizon",
    "n_seeds",
    "mean_per_node_regret",
    "std_per_node_regret",
    "mean_final_regret",
    "std_final_regret",
    "mean_radius",
    "seconds_per_round",
    "comm_total",
    "status",
    "error",
];

/// One summary line per cell; failed cells keep their row with the error text.
pub fn write_summary<W: Write>(out: W, outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for o in outcomes {
        let c = &o.config;
        let n = o.n_nodes().map(|n| n.to_string()).unwrap_or_default();
        let head = [
            c.policy.to_string(),
            c.topology.clone(),
            n,
            c.horizon.to_string(),
            c.seeds.len().to_string(),
        ];
        let tail: Vec<String> = match &o.result {
            Ok(reps) => {
                let per_node: Vec<f64> = reps.iter().map(|r| r.trace.per_node_regret()).collect();
                let finals: Vec<f64> = reps.iter().map(|r| r.trace.final_regret()).collect();
                let (pm, ps) = mean_std(&per_node);
                let (fm, fs) = mean_std(&finals);
                let spr = reps.iter().map(|r| r.seconds_per_round).sum::<f64>() / reps.len() as f64;
                let comm = reps.first().map(|r| r.trace.comm_total()).unwrap_or(0);
                vec![
                    fmt_f64(pm),
                    fmt_f64(ps),
                    fmt_f64(fm),
                    fmt_f64(fs),
                    fmt_f64(mean_radius(&o.traces())),
                    fmt_f64(spr),
                    comm.to_string(),
                    "ok".into(),
                    String::new(),
                ]
            }
            Err(e) => {
                let mut v = vec![String::new(); 7];
                v.push("failed".into());
                v.push(e.to_string());
                v
            }
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard deviation of R(t)/t across seeds, per cell and round.
pub fn write_curves<W: Write>(out: W, outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "policy",
        "topology",
        "n_nodes",
        "t",
        "mean_avg_regret",
        "std_avg_regret",
    ])?;
    for o in outcomes {
        let traces = o.traces();
        if traces.is_empty() {
            continue;
        }
        let curves: Vec<Vec<(usize, f64)>> = traces.iter().map(time_average_curve).collect();
        let n = traces[0].n_nodes().to_string();
        for t in 0..curves[0].len() {
            let vals: Vec<f64> = curves.iter().map(|c| c[t].1).collect();
            let (m, s) = mean_std(&vals);
            w.write_record([
                o.config.policy.to_string(),
                o.config.topology.clone(),
                n.clone(),
                (t + 1).to_string(),
                fmt_f64(m),
                fmt_f64(s),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `R(T)/(N·T)` against N, per policy and topology.
pub fn write_per_node<W: Write>(out: W, outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "topology", "n_nodes", "per_node_regret"])?;
    let mut keys: Vec<(PolicyKind, String)> = Vec::new();
    for o in outcomes {
        let k = (o.config.policy, o.config.topology.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    for (policy, topology) in keys {
        let traces: Vec<RegretTrace> = outcomes
            .iter()
            .filter(|o| o.config.policy == policy && o.config.topology == topology)
            .flat_map(|o| o.traces())
            .collect();
        for (n, v) in per_node_average(&traces)? {
            w.write_record([
                policy.to_string(),
                topology.clone(),
                n.to_string(),
                fmt_f64(v),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(policy: PolicyKind, topology: &str, n_nodes: usize, seed: u64) -> String {
    let topo: String = topology
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { 'x' })
        .collect();
    format!("trace_{policy}_{topo}_n{n_nodes}_seed{seed}.csv")
}

/// Writes one trace CSV per successful replication into `dir`.
pub fn write_traces(dir: &Path, outcomes: &[CellOutcome]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for o in outcomes {
        if let Ok(reps) = &o.result {
            for rep in reps {
                let name = trace_file_name(
                    o.config.policy,
                    &o.config.topology,
                    rep.trace.n_nodes(),
                    rep.seed,
                );
                let path = dir.join(name);
                write_trace(
                    BufWriter::new(File::create(&path)?),
                    &rep.trace,
                    &rep.records,
                )?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}

/// Writes `summary.csv`, `curves.csv`, `per_node.csv` and optionally the
/// traces under `dir/traces`.
pub fn write_outputs(dir: &Path, outcomes: &[CellOutcome], traces: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(
        BufWriter::new(File::create(dir.join("summary.csv"))?),
        outcomes,
    )?;
    write_curves(
        BufWriter::new(File::create(dir.join("curves.csv"))?),
        outcomes,
    )?;
    write_per_node(
        BufWriter::new(File::create(dir.join("per_node.csv"))?),
        outcomes,
    )?;
    if traces {
        write_traces(&dir.join("traces"), outcomes)?;
    }
    Ok(())
}
