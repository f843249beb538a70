use std::fs::File;
use std::io::BufReader;

use proptest::prelude::*;

use netbandit::harness::io::{read_trace, write_trace};
use netbandit::harness::metrics::radius_reduction;
use netbandit::harness::sweep::{sweep, write_outputs, SweepConfig};
use netbandit::harness::{run_replication, InstanceSpec, PolicyKind, RunConfig};

fn small(policy: PolicyKind, topology: &str, horizon: usize) -> RunConfig {
    RunConfig {
        instance: InstanceSpec {
            n_nodes: Some(6),
            ..InstanceSpec::preset("outlier")
        },
        topology: topology.into(),
        horizon,
        seeds: vec![4],
        ..RunConfig::new(policy)
    }
}

#[test]
fn trace_csv_round_trip_is_exact() {
    for policy in PolicyKind::ALL {
        let rep = run_replication(&small(policy, "3x2", 60), 4).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &rep.trace, &rep.records).unwrap();
        let (back, rows) = read_trace(buf.as_slice(), 4).unwrap();
        assert_eq!(back, rep.trace);
        assert_eq!(rows.len(), rep.records.len());
        for (row, rec) in rows.iter().zip(&rep.records) {
            assert_eq!(row.arm, rec.chosen_arm);
            assert_eq!(row.opt_arm, rec.optimal_arm);
            assert_eq!(row.radius.to_bits(), rec.radius.to_bits());
            assert_eq!(row.inst_regret.to_bits(), rec.regret().to_bits());
        }
    }
}

#[test]
fn regret_is_monotone_and_nonnegative() {
    for policy in PolicyKind::ALL {
        let rep = run_replication(&small(policy, "full", 100), 11).unwrap();
        assert!(rep.records.iter().all(|r| r.regret() >= 0.0));
        assert!(rep.trace.cumulative().windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(rep.trace.regret_at(0), 0.0);
    }
}

#[test]
fn disjoint_reduction_against_itself_is_zero() {
    let a = run_replication(&small(PolicyKind::Disjoint, "full", 50), 1).unwrap();
    assert_eq!(
        radius_reduction(
            std::slice::from_ref(&a.trace),
            std::slice::from_ref(&a.trace)
        ),
        0.0
    );
}

#[test]
fn sweep_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig {
        instance: InstanceSpec {
            n_nodes: Some(4),
            ..InstanceSpec::default()
        },
        topologies: vec!["full".into(), "2x2".into(), "1x4".into()],
        horizon: 20,
        seeds: vec![0, 1],
        write_traces: true,
        ..SweepConfig::default()
    };
    let out = sweep(&cfg).unwrap();
    assert_eq!(out.len(), 12);
    write_outputs(dir.path(), &out, true).unwrap();

    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 13);
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 12 * 20);
    let traces: Vec<_> = std::fs::read_dir(dir.path().join("traces"))
        .unwrap()
        .collect();
    assert_eq!(traces.len(), 24);

    for entry in traces {
        let path = entry.unwrap().path();
        let (trace, _) = read_trace(BufReader::new(File::open(&path).unwrap()), 0).unwrap();
        assert_eq!(trace.horizon(), 20);
        assert_eq!(trace.n_nodes(), 4);
    }
}

#[test]
fn sweep_config_parses_nested_sections() {
    let cfg = SweepConfig::from_toml(
        r#"
        policies = ["disjoint", "netlinucb"]
        topologies = ["3x4", "6x2", "12"]
        horizon = 500
        seeds = [0, 1, 2, 3]

        [instance]
        preset = "rich_actions"

        [params]
        rho = 0.8
        "#,
    )
    .unwrap();
    assert_eq!(cfg.cells().unwrap().len(), 6);
    assert_eq!(cfg.params.rho, 0.8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Per-seed results do not depend on which other seeds run alongside.
    #[test]
    fn seed_isolation(seed in 0u64..1000, other in 0u64..1000) {
        let cfg = SweepConfig {
            policies: vec![PolicyKind::NetSgdUcb],
            instance: InstanceSpec { n_nodes: Some(3), ..InstanceSpec::default() },
            horizon: 15,
            seeds: vec![other, seed],
            ..SweepConfig::default()
        };
        let grid = sweep(&cfg).unwrap();
        let alone = run_replication(&cfg.cells().unwrap()[0], seed).unwrap();
        prop_assert_eq!(&grid[0].traces()[1], &alone.trace);
    }
}
