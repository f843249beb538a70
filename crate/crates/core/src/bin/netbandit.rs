use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netbandit::environment::{preset, PRESET_NAMES};
use netbandit::harness::io::{fmt_f64, read_trace, weights_header, write_weights};
use netbandit::harness::metrics::{mean_radius, mean_std, radius_reduction, RegretTrace};
use netbandit::harness::sweep::{
    run_cells, trace_file_name, write_outputs, CellOutcome, SweepConfig,
};
use netbandit::harness::{run_replication_observed, PolicyKind, RunConfig, OUTPUT_DIR_ENV};
use netbandit::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "netbandit",
    version,
    about = "Networked contextual bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one policy on one topology over a list of seeds.
    Run(RunArgs),
    /// Run a policies × topologies × sizes grid.
    Sweep(SweepArgs),
    /// Recompute metrics from trace CSV files or directories.
    Report(ReportArgs),
    /// List the instance presets.
    Presets,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with the configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    preset: Option<String>,

    /// Override the preset's number of nodes.
    #[arg(long)]
    nodes: Option<usize>,

    #[arg(long)]
    horizon: Option<usize>,

    /// Comma-separated seeds, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,

    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,

    #[arg(long)]
    alpha_ridge: Option<f64>,

    #[arg(long)]
    alpha0_sgd: Option<f64>,

    #[arg(long)]
    eta_sgd: Option<f64>,

    #[arg(long)]
    mu: Option<f64>,

    #[arg(long)]
    gamma: Option<f64>,

    #[arg(long)]
    rho: Option<f64>,

    #[arg(long)]
    beta: Option<f64>,

    /// Feed the aggregated common estimate back into the local SGD state.
    #[arg(long)]
    consensus_feedback: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,

    #[arg(long)]
    policy: Option<PolicyKind>,

    /// Component layout such as `full`, `12`, `6x2`, `1x12`.
    #[arg(long)]
    topology: Option<String>,

    /// Also write the weight matrices after every round.
    #[arg(long)]
    dump_weights: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,

    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,

    #[arg(long, value_delimiter = ',')]
    topologies: Option<Vec<String>>,

    /// Comma-separated network sizes.
    #[arg(long = "node-list", value_delimiter = ',')]
    node_list: Option<Vec<usize>>,

    /// Write one trace CSV per replication.
    #[arg(long)]
    traces: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Trace files or directories containing them.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn apply_common(
    c: &Common,
    instance: &mut netbandit::harness::InstanceSpec,
    horizon: &mut usize,
    seeds: &mut Vec<u64>,
    params: &mut netbandit::harness::PolicyParams,
    output_dir: &mut Option<PathBuf>,
) {
    if let Some(p) = &c.preset {
        instance.preset = Some(p.clone());
        instance.config = None;
    }
    if let Some(n) = c.nodes {
        instance.n_nodes = Some(n);
    }
    if let Some(h) = c.horizon {
        *horizon = h;
    }
    if let Some(s) = &c.seed_list {
        *seeds = s.clone();
    }
    if let Some(d) = &c.output_dir {
        *output_dir = Some(d.clone());
    }
    if c.alpha_ridge.is_some() {
        params.alpha_ridge = c.alpha_ridge;
    }
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut params.alpha0_sgd, c.alpha0_sgd);
    set(&mut params.eta_sgd, c.eta_sgd);
    set(&mut params.mu, c.mu);
    set(&mut params.gamma, c.gamma);
    set(&mut params.rho, c.rho);
    set(&mut params.beta, c.beta);
    if c.consensus_feedback {
        params.consensus_feedback = true;
    }
}

fn output_dir(dir: Option<PathBuf>) -> PathBuf {
    dir.unwrap_or_else(|| PathBuf::from("results"))
}

fn report_outcomes(outcomes: &[CellOutcome]) -> usize {
    let mut failed = 0;
    for o in outcomes {
        let c = &o.config;
        match &o.result {
            Ok(reps) => {
                let per_node: Vec<f64> = reps.iter().map(|r| r.trace.per_node_regret()).collect();
                let (m, s) = mean_std(&per_node);
                println!(
                    "{:<10} {:<8} N={:<3} R(T)/(NT) = {:.5} ± {:.5}",
                    c.policy,
                    c.topology,
                    reps[0].trace.n_nodes(),
                    m,
                    s
                );
            }
            Err(e) => {
                failed += 1;
                eprintln!("{} {}: {e}", c.policy, c.topology);
            }
        }
    }
    failed
}

fn cmd_run(args: RunArgs) -> Result<usize> {
    let mut cfg = match &args.common.config {
        Some(p) => RunConfig::from_toml(&read_text(p)?)?,
        None => RunConfig::new(args.policy.unwrap_or(PolicyKind::NetLinUcb)),
    };
    if let Some(p) = args.policy {
        cfg.policy = p;
    }
    if let Some(t) = &args.topology {
        cfg.topology = t.clone();
    }
    apply_common(
        &args.common,
        &mut cfg.instance,
        &mut cfg.horizon,
        &mut cfg.seeds,
        &mut cfg.params,
        &mut cfg.output_dir,
    );
    let dir = output_dir(cfg.output_dir.clone());
    let (inst, _) = cfg.resolve()?;
    fs::create_dir_all(&dir)?;

    let mut reps = Vec::new();
    for &seed in &cfg.seeds {
        let rep = if args.dump_weights {
            let name = trace_file_name(cfg.policy, &cfg.topology, inst.dims.n_nodes, seed)
                .replacen("trace_", "weights_", 1);
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?));
            w.write_record(weights_header(inst.dims.n_nodes))?;
            let rep =
                run_replication_observed(&cfg, seed, &mut |sim| match sim.policy().weights() {
                    Some(ws) => write_weights(&mut w, sim.round(), ws),
                    None => Ok(()),
                })?;
            w.flush()?;
            rep
        } else {
            run_replication_observed(&cfg, seed, &mut |_| Ok(()))?
        };
        reps.push(rep);
    }
    let outcomes = vec![CellOutcome {
        config: cfg,
        result: Ok(reps),
    }];
    write_outputs(&dir, &outcomes, true)?;
    report_outcomes(&outcomes);
    println!("wrote {}", dir.display());
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<usize> {
    let mut cfg = match &args.common.config {
        Some(p) => SweepConfig::from_toml(&read_text(p)?)?,
        None => SweepConfig::default(),
    };
    if let Some(p) = &args.policies {
        cfg.policies = p.clone();
    }
    if let Some(t) = &args.topologies {
        cfg.topologies = t.clone();
    }
    if let Some(n) = &args.node_list {
        cfg.nodes = n.clone();
    }
    if args.traces {
        cfg.write_traces = true;
    }
    apply_common(
        &args.common,
        &mut cfg.instance,
        &mut cfg.horizon,
        &mut cfg.seeds,
        &mut cfg.params,
        &mut cfg.output_dir,
    );
    let dir = output_dir(cfg.output_dir.clone());
    let outcomes = run_cells(cfg.cells()?);
    write_outputs(&dir, &outcomes, cfg.write_traces)?;
    let failed = report_outcomes(&outcomes);
    println!("wrote {}", dir.display());
    Ok(failed)
}

/// Splits `trace_{policy}_{topology}_n{N}_seed{S}.csv`.
fn parse_trace_name(path: &Path) -> Option<(String, String, u64)> {
    let stem = path.file_stem()?.to_str()?.strip_prefix("trace_")?;
    let (rest, seed) = stem.rsplit_once("_seed")?;
    let (policy, group) = rest.split_once('_')?;
    Some((policy.to_string(), group.to_string(), seed.parse().ok()?))
}

fn collect_traces(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "csv") && parse_trace_name(f).is_some()
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_report(args: ReportArgs) -> Result<usize> {
    let files = collect_traces(&args.paths)?;
    if files.is_empty() {
        return Err(Error::Trace("no trace files found".into()));
    }
    // (topology group, policy) -> traces
    let mut groups: BTreeMap<(String, String), Vec<RegretTrace>> = BTreeMap::new();
    for f in &files {
        let (policy, group, seed) =
            parse_trace_name(f).unwrap_or_else(|| ("unknown".into(), f.display().to_string(), 0));
        let (trace, _) = read_trace(BufReader::new(File::open(f)?), seed)?;
        groups.entry((group, policy)).or_default().push(trace);
    }

    let mut w = csv::Writer::from_writer(io::stdout());
    w.write_record([
        "policy",
        "group",
        "n_seeds",
        "mean_final_regret",
        "mean_per_node_regret",
        "std_per_node_regret",
        "mean_radius",
        "radius_reduction_pct",
    ])?;
    for ((group, policy), traces) in &groups {
        let finals: Vec<f64> = traces.iter().map(|t| t.final_regret()).collect();
        let per_node: Vec<f64> = traces.iter().map(|t| t.per_node_regret()).collect();
        let (pm, ps) = mean_std(&per_node);
        let reduction = groups
            .get(&(group.clone(), PolicyKind::Disjoint.to_string()))
            .map(|base| fmt_f64(radius_reduction(traces, base)))
            .unwrap_or_default();
        w.write_record([
            policy.clone(),
            group.clone(),
            traces.len().to_string(),
            fmt_f64(mean_std(&finals).0),
            fmt_f64(pm),
            fmt_f64(ps),
            fmt_f64(mean_radius(traces)),
            reduction,
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_presets() -> Result<usize> {
    println!(
        "{:<18} {:>3} {:>3} {:>4} {:>4} {:>6} {:>6} {:>8}",
        "name", "N", "K", "d_c", "d_s", "sigma", "gap", "outlier"
    );
    for name in PRESET_NAMES {
        let p = preset(name)?;
        println!(
            "{:<18} {:>3} {:>3} {:>4} {:>4} {:>6} {:>6} {:>8}",
            name,
            p.dims.n_nodes,
            p.dims.n_arms,
            p.dims.d_common,
            p.dims.d_specific[0],
            p.noise_sigma,
            p.reward_gap_scale,
            p.outlier_probability
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
        Command::Presets => cmd_presets(),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} cell(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
