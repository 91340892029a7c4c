//! Alpha sweeps: the latency / remote-fraction trade-off table and the
//! partitioner-vs-oracle gap experiments.

use thiserror::Error;

use crate::graph::{gen_synthetic, Dag, GraphError, SizeProfile, SyntheticShape};
use crate::partition::{
    fixed_policy, partition, Objective, PartitionError, PlacementPolicy,
};
use crate::platform::{PerfLut, PlatformSpec};
use crate::sim::{oracle_sweep, plan_objective, simulate, OracleLimits, SimError};
use crate::Scalar;

/// One sweep row: the plan chosen at `alpha`, measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint<T> {
    pub alpha: T,
    pub latency_s: T,
    /// Latency relative to the ALL_LOCAL policy on the same (dag, lut).
    pub latency_rel: T,
    pub remote_fraction: T,
    pub host_bytes: u64,
    pub migrations: u64,
}

/// Sweep rows (alpha descending) plus the four fixed policies for
/// comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoTable<T> {
    pub points: Vec<ParetoPoint<T>>,
    pub policies: Vec<(PlacementPolicy, ParetoPoint<T>)>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid alpha grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Sort descending, drop duplicates, reject values outside [0, 1].
fn normalize_grid<T: Scalar>(alphas: &[T]) -> Result<Vec<T>, SweepError> {
    if alphas.is_empty() {
        return Err(SweepError::InvalidGrid("empty grid".into()));
    }
    let mut grid = Vec::with_capacity(alphas.len());
    for &a in alphas {
        if !(a >= T::zero() && a <= T::one()) {
            return Err(SweepError::InvalidGrid(format!("alpha {a} outside [0, 1]")));
        }
        grid.push(a);
    }
    grid.sort_by(|a, b| b.partial_cmp(a).expect("alphas are finite"));
    grid.dedup();
    Ok(grid)
}

/// The default 11-point grid, 1.0 down to 0.0.
pub fn default_alpha_grid<T: Scalar>() -> Vec<T> {
    (0..=10)
        .rev()
        .map(|i| T::from_f64(i as f64 / 10.0).expect("grid value"))
        .collect()
}

/// Partition and simulate at every alpha, and measure the fixed policies.
pub fn pareto_sweep<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    platform: &PlatformSpec<T>,
    alphas: &[T],
) -> Result<ParetoTable<T>, SweepError> {
    let grid = normalize_grid(alphas)?;
    let baseline = simulate(dag, &fixed_policy(dag, PlacementPolicy::AllLocal), lut, platform)?;
    let relative = |latency: T| {
        if baseline.latency_s > T::zero() {
            latency / baseline.latency_s
        } else {
            T::one()
        }
    };

    let mut points = Vec::with_capacity(grid.len());
    for &alpha in &grid {
        let obj = Objective::with_defaults(dag, lut, alpha)?;
        let plan = partition(dag, lut, &obj)?;
        let r = simulate(dag, &plan, lut, platform)?;
        points.push(ParetoPoint {
            alpha,
            latency_s: r.latency_s,
            latency_rel: relative(r.latency_s),
            remote_fraction: r.remote_fraction,
            host_bytes: r.host_bytes,
            migrations: r.migrations,
        });
    }

    let mut policies = Vec::with_capacity(PlacementPolicy::ALL.len());
    for policy in PlacementPolicy::ALL {
        let r = simulate(dag, &fixed_policy(dag, policy), lut, platform)?;
        policies.push((
            policy,
            ParetoPoint {
                alpha: T::zero(),
                latency_s: r.latency_s,
                latency_rel: relative(r.latency_s),
                remote_fraction: r.remote_fraction,
                host_bytes: r.host_bytes,
                migrations: r.migrations,
            },
        ));
    }
    Ok(ParetoTable { points, policies })
}

pub const PARETO_HEADER: &str = "alpha,latency_s,latency_rel,remote_fraction,host_bytes,migrations";

/// CSV rendering: grid rows by alpha descending, then the policy rows with
/// the policy name in the alpha column.
pub fn pareto_to_csv<T: Scalar>(table: &ParetoTable<T>) -> String {
    let mut out = String::from(PARETO_HEADER);
    out.push('\n');
    let metrics = |p: &ParetoPoint<T>| {
        format!(
            "{},{},{},{},{}",
            p.latency_s, p.latency_rel, p.remote_fraction, p.host_bytes, p.migrations
        )
    };
    for p in &table.points {
        out.push_str(&format!("{},{}\n", p.alpha, metrics(p)));
    }
    for (policy, p) in &table.policies {
        out.push_str(&format!("{policy},{}\n", metrics(p)));
    }
    out
}

// ── Oracle gap analysis ──────────────────────────────────────────────

/// Partitioner cost vs oracle cost at one alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow<T> {
    pub alpha: T,
    pub partitioner_cost: T,
    pub oracle_cost: T,
    /// `(partitioner - oracle) / oracle`; zero when both are zero.
    pub rel_gap: T,
}

pub const GAP_HEADER: &str = "alpha,partitioner_cost,oracle_cost,rel_gap";

fn relative_gap<T: Scalar>(partitioner: T, oracle: T) -> T {
    if oracle > T::zero() {
        (partitioner - oracle) / oracle
    } else if partitioner <= T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

/// Compare the partitioner against the exhaustive oracle on one instance.
pub fn gap_table<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    platform: &PlatformSpec<T>,
    alphas: &[T],
    limits: OracleLimits,
) -> Result<Vec<GapRow<T>>, SweepError> {
    let grid = normalize_grid(alphas)?;
    let mut objectives = Vec::with_capacity(grid.len());
    for &alpha in &grid {
        objectives.push(Objective::with_defaults(dag, lut, alpha)?);
    }
    let oracle_best = oracle_sweep(dag, lut, &objectives, platform, limits)?;
    let mut rows = Vec::with_capacity(grid.len());
    for (obj, (_, oracle_cost)) in objectives.iter().zip(oracle_best) {
        let plan = partition(dag, lut, obj)?;
        let report = simulate(dag, &plan, lut, platform)?;
        let partitioner_cost = plan_objective(&report, obj);
        rows.push(GapRow {
            alpha: obj.alpha(),
            partitioner_cost,
            oracle_cost,
            rel_gap: relative_gap(partitioner_cost, oracle_cost),
        });
    }
    Ok(rows)
}

pub fn gap_rows_to_csv<T: Scalar>(rows: &[GapRow<T>]) -> String {
    let mut out = String::from(GAP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.alpha, r.partitioner_cost, r.oracle_cost, r.rel_gap
        ));
    }
    out
}

/// One generated instance of the randomized gap experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GapInstance<T> {
    pub index: usize,
    pub shape: SyntheticShape,
    pub n_ops: usize,
    pub seed: u64,
    pub rows: Vec<GapRow<T>>,
}

/// Aggregate statistics over every (instance, alpha) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSummary<T> {
    pub cases: usize,
    /// Rows where the partitioner undercut the oracle (must stay zero).
    pub violations: usize,
    pub median_rel_gap: T,
    pub max_rel_gap: T,
}

/// Seeded randomized comparison across generated workloads. Instance `i`
/// cycles shapes chain/fanout/residual and op counts 2..=8 with a 9- and a
/// 10-op instance every sixteen, all derived from `master_seed`.
pub fn gap_experiment<T: Scalar>(
    instances: usize,
    master_seed: u64,
    platform: &PlatformSpec<T>,
    alphas: &[T],
    limits: OracleLimits,
) -> Result<(Vec<GapInstance<T>>, GapSummary<T>), SweepError> {
    const SIZES: [usize; 16] = [2, 3, 4, 5, 6, 7, 8, 2, 3, 4, 5, 6, 7, 8, 9, 10];
    const SHAPES: [SyntheticShape; 3] =
        [SyntheticShape::Chain, SyntheticShape::Fanout, SyntheticShape::Residual];
    let profile = SizeProfile::default();
    let mut out = Vec::with_capacity(instances);
    let mut gaps: Vec<T> = Vec::new();
    let mut violations = 0;
    for i in 0..instances {
        let shape = SHAPES[i % SHAPES.len()];
        let mut n_ops = SIZES[i % SIZES.len()];
        if shape == SyntheticShape::Fanout {
            n_ops = n_ops.max(3);
        }
        let seed = master_seed.wrapping_add(i as u64);
        let dag = gen_synthetic(shape, n_ops, seed, &profile)?;
        let lut = crate::platform::build_lut_synthetic(&dag, platform);
        let rows = gap_table(&dag, &lut, platform, alphas, limits)?;
        for r in &rows {
            if r.rel_gap < -T::from_f64(1e-9).expect("eps") {
                violations += 1;
            }
            gaps.push(r.rel_gap.max(T::zero()));
        }
        out.push(GapInstance { index: i, shape, n_ops, seed, rows });
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("gaps are finite"));
    let median_rel_gap = if gaps.is_empty() {
        T::zero()
    } else if gaps.len() % 2 == 1 {
        gaps[gaps.len() / 2]
    } else {
        let two = T::from_f64(2.0).expect("2");
        (gaps[gaps.len() / 2 - 1] + gaps[gaps.len() / 2]) / two
    };
    let max_rel_gap = gaps.last().copied().unwrap_or_else(T::zero);
    let summary = GapSummary { cases: gaps.len(), violations, median_rel_gap, max_rel_gap };
    Ok((out, summary))
}
