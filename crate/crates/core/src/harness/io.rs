//! CSV writers and the trace reader.

use std::io::{Read, Write};

use crate::domain::RoundRecord;
use crate::error::{Error, Result};
use crate::weights::WeightMatrixSet;

use super::metrics::RegretTrace;

pub const TRACE_HEADER: [&str; 8] = [
    "t",
    "node",
    "arm",
    "opt_arm",
    "inst_regret",
    "cum_regret",
    "radius",
    "comm_scalars",
];

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One parsed line of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub node: usize,
    pub arm: usize,
    pub opt_arm: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub radius: f64,
    pub comm_scalars: u64,
}

/// Writes one row per (round, node). `cum_regret` and `comm_scalars` are the
/// network totals for that round.
pub fn write_trace<W: Write>(out: W, trace: &RegretTrace, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        if r.t == 0 || r.t > trace.horizon() {
            return Err(Error::Trace(format!(
                "record for round {} outside trace",
                r.t
            )));
        }
        w.write_record([
            r.t.to_string(),
            r.node.to_string(),
            r.chosen_arm.to_string(),
            r.optimal_arm.to_string(),
            fmt_f64(r.regret()),
            fmt_f64(trace.regret_at(r.t)),
            fmt_f64(r.radius),
            trace.comm()[r.t - 1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::Trace(format!(
            "line {line}: cannot parse `{raw}` in column `{}`",
            TRACE_HEADER[idx]
        ))
    })
}

/// Parses a trace file back into its rows and the network series.
pub fn read_trace<R: Read>(input: R, seed: u64) -> Result<(RegretTrace, Vec<TraceRow>)> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Trace(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(TraceRow {
            t: field(&rec, 0, line)?,
            node: field(&rec, 1, line)?,
            arm: field(&rec, 2, line)?,
            opt_arm: field(&rec, 3, line)?,
            inst_regret: field(&rec, 4, line)?,
            cum_regret: field(&rec, 5, line)?,
            radius: field(&rec, 6, line)?,
            comm_scalars: field(&rec, 7, line)?,
        });
    }
    let n_nodes = rows.iter().map(|r| r.node + 1).max().unwrap_or(0);
    let horizon = rows.iter().map(|r| r.t).max().unwrap_or(0);
    if n_nodes * horizon != rows.len() {
        return Err(Error::Trace(format!(
            "expected {} rows for {n_nodes} nodes over {horizon} rounds, found {}",
            n_nodes * horizon,
            rows.len()
        )));
    }

    let mut inst = vec![0.0; horizon];
    let mut radius = vec![0.0; horizon];
    let mut comm = vec![0u64; horizon];
    for (idx, r) in rows.iter().enumerate() {
        if r.t != idx / n_nodes + 1 || r.node != idx % n_nodes {
            return Err(Error::Trace(format!("row {} out of order", idx + 2)));
        }
        inst[r.t - 1] += r.inst_regret;
        radius[r.t - 1] += r.radius;
        comm[r.t - 1] = r.comm_scalars;
    }
    let trace = RegretTrace::from_rounds(seed, n_nodes, inst, comm, radius)?;
    for r in &rows {
        if r.cum_regret != trace.regret_at(r.t) {
            return Err(Error::Trace(format!(
                "cum_regret at t={} disagrees with the running sum",
                r.t
            )));
        }
    }
    Ok((trace, rows))
}

/// Appends the round-`t` matrices, one CSV line per matrix row: `t,arm,row,w_0..w_{N-1}`.
pub fn write_weights<W: Write>(
    w: &mut csv::Writer<W>,
    t: usize,
    weights: &WeightMatrixSet,
) -> Result<()> {
    let n = weights.n_nodes();
    for arm in 0..weights.n_arms() {
        let m = weights.row_major(arm);
        for row in 0..n {
            let mut line = vec![t.to_string(), arm.to_string(), row.to_string()];
            line.extend(m[row * n..(row + 1) * n].iter().map(|&v| fmt_f64(v)));
            w.write_record(&line)?;
        }
    }
    Ok(())
}

pub fn weights_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "arm".into(), "row".into()];
    h.extend((0..n).map(|j| format!("w_{j}")));
    h
}
