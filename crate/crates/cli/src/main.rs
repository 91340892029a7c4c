//! Command-line front end: generate or ingest DAGs and lookup tables, run
//! the partitioner and the fixed policies, simulate plans, sweep alpha for
//! trade-off tables, and compare against the exhaustive oracle.
//!
//! Every command is deterministic: identical flags and seeds produce
//! byte-identical output files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tierplan::graph::{gen_synthetic, Dag, SizeProfile, SyntheticShape};
use tierplan::pareto::{
    default_alpha_grid, gap_experiment, gap_rows_to_csv, gap_table, pareto_sweep, pareto_to_csv,
    GAP_HEADER,
};
use tierplan::partition::{
    fixed_policy, load_plan, partition, plan_to_string, Objective, PlacementPolicy,
};
use tierplan::platform::{
    build_lut_synthetic, default_platform, load_lut, lut_to_string, validate_lut, PlatformName,
};
use tierplan::sim::{
    per_op_latency_csv, report_to_string, simulate, OracleLimits,
};
use tierplan::{PerfLut64, PlatformSpec64};

#[derive(Parser)]
#[command(name = "tierplan", version, about = "Compute-offload and data-placement planning for far-memory platforms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a deterministic synthetic workload DAG.
    Gen(GenArgs),
    /// Build a synthetic lookup table for a DAG, or ingest and validate a
    /// measured one.
    Profile(ProfileArgs),
    /// Choose a placement plan: weighted-sum partitioner or a fixed policy.
    Partition(PartitionArgs),
    /// Evaluate a plan: end-to-end latency, bytes, migrations.
    Simulate(SimulateArgs),
    /// Sweep alpha and tabulate the latency / remote-fraction trade-off.
    Pareto(ParetoArgs),
    /// Compare partitioner cost against the exhaustive oracle.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Workload structure: chain|fanout|residual.
    #[arg(long)]
    shape: String,
    /// Number of operations.
    #[arg(long)]
    ops: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size profile: default|memory-bound.
    #[arg(long, default_value = "default")]
    profile: String,
    /// Leave external inputs/outputs unpinned instead of pinned local.
    #[arg(long)]
    unpinned: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    dag: PathBuf,
    /// A|B or a path to a platform JSON file.
    #[arg(long, default_value = "B")]
    platform: String,
    /// Ingest this measured table (validated against the DAG) instead of
    /// synthesizing one.
    #[arg(long)]
    lut: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    dag: PathBuf,
    /// Lookup table; required unless --policy is given.
    #[arg(long)]
    lut: Option<PathBuf>,
    /// Objective weight in [0, 1]: 1 = pure latency, 0 = pure host-byte
    /// minimization.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed policy instead of the partitioner:
    /// ALL_LOCAL|ALL_REMOTE|WEIGHT_REMOTE|RESULT_REMOTE.
    #[arg(long, conflicts_with = "alpha")]
    policy: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    lut: PathBuf,
    #[arg(long, default_value = "B")]
    platform: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-op latencies as CSV rows.
    #[arg(long)]
    per_op: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    lut: PathBuf,
    #[arg(long, default_value = "B")]
    platform: String,
    /// Comma-separated alphas; default is the 11-point grid 1.0..0.0.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// DAG to check (with --lut); omit when using --random-instances.
    #[arg(long)]
    dag: Option<PathBuf>,
    #[arg(long)]
    lut: Option<PathBuf>,
    /// Run the seeded randomized experiment over this many generated
    /// instances instead of a single DAG.
    #[arg(long)]
    random_instances: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "B")]
    platform: String,
    /// Comma-separated alphas; default 0,0.25,0.5,0.75,1.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Oracle op-count cap.
    #[arg(long, default_value_t = 12)]
    max_ops: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Profile(a) => cmd_profile(a),
        Cmd::Partition(a) => cmd_partition(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Pareto(a) => cmd_pareto(a),
        Cmd::OracleCheck(a) => cmd_oracle_check(a),
    }
}

fn resolve_platform(spec: &str) -> Result<PlatformSpec64> {
    match PlatformName::from_str(spec) {
        Ok(name) => Ok(default_platform(name)),
        Err(_) => PlatformSpec64::load(spec)
            .with_context(|| format!("loading platform file {spec:?}")),
    }
}

fn resolve_profile(name: &str, unpinned: bool) -> Result<SizeProfile> {
    let profile = match name {
        "default" => SizeProfile::default(),
        "memory-bound" => SizeProfile::memory_bound(),
        other => bail!("unknown size profile {other:?}, expected default|memory-bound"),
    };
    Ok(profile.with_pin_external(!unpinned))
}

fn parse_grid(grid: &Option<String>, default: Vec<f64>) -> Result<Vec<f64>> {
    match grid {
        None => Ok(default),
        Some(s) => s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("alpha grid value {v:?}"))
            })
            .collect(),
    }
}

fn load_dag(path: &Path) -> Result<Dag> {
    Dag::load(path).with_context(|| format!("loading dag {}", path.display()))
}

fn load_lut_for(dag: &Dag, path: &Path) -> Result<PerfLut64> {
    let lut = load_lut(path).with_context(|| format!("loading lut {}", path.display()))?;
    validate_lut(&lut, dag)
        .into_result()
        .with_context(|| format!("validating lut {} against dag", path.display()))?;
    Ok(lut)
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let shape = SyntheticShape::from_str(&a.shape).map_err(anyhow::Error::msg)?;
    let profile = resolve_profile(&a.profile, a.unpinned)?;
    let dag = gen_synthetic(shape, a.ops, a.seed, &profile)?;
    write_out(&a.out, &dag.to_json_string())
}

fn cmd_profile(a: ProfileArgs) -> Result<()> {
    let dag = load_dag(&a.dag)?;
    let lut = match &a.lut {
        Some(path) => load_lut_for(&dag, path)?,
        None => {
            let platform = resolve_platform(&a.platform)?;
            build_lut_synthetic(&dag, &platform)
        }
    };
    write_out(&a.out, &lut_to_string(&lut))
}

fn cmd_partition(a: PartitionArgs) -> Result<()> {
    let dag = load_dag(&a.dag)?;
    let plan = match (&a.policy, a.alpha) {
        (Some(policy), None) => {
            let policy = PlacementPolicy::from_str(policy).map_err(anyhow::Error::msg)?;
            fixed_policy(&dag, policy)
        }
        (None, Some(alpha)) => {
            let lut_path =
                a.lut.as_ref().context("--lut is required when partitioning by --alpha")?;
            let lut = load_lut_for(&dag, lut_path)?;
            let obj = Objective::with_defaults(&dag, &lut, alpha)?;
            partition(&dag, &lut, &obj)?
        }
        (None, None) => bail!("one of --alpha or --policy is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    write_out(&a.out, &plan_to_string(&plan, &dag))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let dag = load_dag(&a.dag)?;
    let lut = load_lut_for(&dag, &a.lut)?;
    let platform = resolve_platform(&a.platform)?;
    let plan = load_plan(&a.plan)
        .with_context(|| format!("loading plan {}", a.plan.display()))?;
    let report = simulate(&dag, &plan, &lut, &platform)?;
    write_out(&a.out, &report_to_string(&report))?;
    if let Some(per_op) = &a.per_op {
        write_out(per_op, &per_op_latency_csv(&report))?;
    }
    Ok(())
}

fn cmd_pareto(a: ParetoArgs) -> Result<()> {
    let dag = load_dag(&a.dag)?;
    let lut = load_lut_for(&dag, &a.lut)?;
    let platform = resolve_platform(&a.platform)?;
    let grid = parse_grid(&a.alpha_grid, default_alpha_grid())?;
    let table = pareto_sweep(&dag, &lut, &platform, &grid)?;
    write_out(&a.out, &pareto_to_csv(&table))
}

fn cmd_oracle_check(a: OracleCheckArgs) -> Result<()> {
    let platform = resolve_platform(&a.platform)?;
    let grid = parse_grid(&a.alpha_grid, vec![1.0, 0.75, 0.5, 0.25, 0.0])?;
    let limits = OracleLimits { max_ops: a.max_ops, ..OracleLimits::default() };

    if let Some(instances) = a.random_instances {
        if a.dag.is_some() || a.lut.is_some() {
            bail!("--random-instances replaces --dag/--lut");
        }
        let (runs, summary) = gap_experiment(instances, a.seed, &platform, &grid, limits)?;
        let mut csv = format!("instance,shape,n_ops,seed,{GAP_HEADER}\n");
        let mut violations = 0;
        for run in &runs {
            let shape = match run.shape {
                SyntheticShape::Chain => "chain",
                SyntheticShape::Fanout => "fanout",
                SyntheticShape::Residual => "residual",
            };
            for r in &run.rows {
                csv.push_str(&format!(
                    "{},{shape},{},{},{},{},{},{}\n",
                    run.index, run.n_ops, run.seed, r.alpha, r.partitioner_cost, r.oracle_cost,
                    r.rel_gap
                ));
                if r.rel_gap < -1e-9 {
                    violations += 1;
                }
            }
        }
        write_out(&a.out, &csv)?;
        println!(
            "summary cases={} violations={} median_rel_gap={} max_rel_gap={}",
            summary.cases, summary.violations, summary.median_rel_gap, summary.max_rel_gap
        );
        if violations > 0 {
            bail!("{violations} cases had partitioner cost below the oracle");
        }
        return Ok(());
    }

    let dag_path = a.dag.as_ref().context("--dag is required without --random-instances")?;
    let lut_path = a.lut.as_ref().context("--lut is required without --random-instances")?;
    let dag = load_dag(dag_path)?;
    let lut = load_lut_for(&dag, lut_path)?;
    let rows = gap_table(&dag, &lut, &platform, &grid, limits)?;
    write_out(&a.out, &gap_rows_to_csv(&rows))?;
    if let Some(bad) = rows.iter().find(|r| r.rel_gap < -1e-9) {
        bail!(
            "partitioner cost {} below oracle cost {} at alpha {}",
            bad.partitioner_cost,
            bad.oracle_cost,
            bad.alpha
        );
    }
    Ok(())
}
