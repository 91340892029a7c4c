//! Deterministic evaluation of (DAG, plan, lookup table) triples and the
//! exhaustive oracle for small instances.
//!
//! Execution is sequential in topological order with no overlap; each
//! host<->device compute transition between consecutive ops is charged the
//! platform's migration overhead. Plans are per-tensor but the lookup table
//! is per-axis, so placements collapse onto each op's axes by majority of
//! bytes (exact tie goes Remote, an empty weights axis is Local).

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Dag, OpNode};
use crate::partition::{Objective, PlacementPlan};
use crate::platform::{validate_lut, OpConfig, PerfLut, PlatformError, PlatformSpec};
use crate::{ComputeLoc, Placement, Scalar};

/// What a plan costs end to end.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport<T> {
    pub latency_s: T,
    /// Bytes placed Local.
    pub host_bytes: u64,
    /// Remote bytes over total bytes, in [0, 1].
    pub remote_fraction: T,
    /// Host<->device compute transitions along the topological order.
    pub migrations: u64,
    pub per_op_latency: BTreeMap<String, T>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Lut(#[from] PlatformError),
    #[error(
        "instance too large for exhaustive search: {ops} ops (max {max_ops}), \
         {free_tensors} free tensors (max {max_free_tensors})"
    )]
    TooLarge { ops: usize, max_ops: usize, free_tensors: usize, max_free_tensors: usize },
    #[error("report io: {0}")]
    Io(String),
}

/// Majority-of-bytes collapse for one axis. Exact ties go Remote.
fn collapse_axis(local_bytes: u64, remote_bytes: u64) -> Placement {
    if local_bytes > remote_bytes {
        Placement::Local
    } else {
        Placement::Remote
    }
}

fn axis_bytes(
    ids: &[String],
    plan: &PlacementPlan,
    dag: &Dag,
) -> Result<(u64, u64), SimError> {
    let mut local = 0;
    let mut remote = 0;
    for id in ids {
        let t = dag.tensor(id).expect("dag references resolve");
        match plan.placement.get(id) {
            Some(Placement::Local) => local += t.size_bytes,
            Some(Placement::Remote) => remote += t.size_bytes,
            None => return Err(SimError::InvalidPlan(format!("no placement for tensor {id:?}"))),
        }
    }
    Ok((local, remote))
}

/// The per-axis configuration a plan implies for one op.
pub fn effective_config(
    op: &OpNode,
    plan: &PlacementPlan,
    dag: &Dag,
) -> Result<OpConfig, SimError> {
    let compute = *plan
        .compute
        .get(&op.id)
        .ok_or_else(|| SimError::InvalidPlan(format!("no compute location for op {:?}", op.id)))?;
    let weights = if op.has_weights() {
        let (l, r) = axis_bytes(&op.weight_ids, plan, dag)?;
        collapse_axis(l, r)
    } else {
        Placement::Local
    };
    let (l, r) = axis_bytes(&op.input_ids, plan, dag)?;
    let inputs = collapse_axis(l, r);
    let (l, r) = axis_bytes(&op.output_ids, plan, dag)?;
    let outputs = collapse_axis(l, r);
    Ok(OpConfig { compute, weights, inputs, outputs })
}

/// Execute a plan: sequential sum of per-op latencies in topological order
/// plus migration overhead, and the placement byte accounting.
pub fn simulate<T: Scalar>(
    dag: &Dag,
    plan: &PlacementPlan,
    lut: &PerfLut<T>,
    platform: &PlatformSpec<T>,
) -> Result<SimReport<T>, SimError> {
    for t in dag.tensors() {
        if !plan.placement.contains_key(&t.id) {
            return Err(SimError::InvalidPlan(format!("no placement for tensor {:?}", t.id)));
        }
    }
    let mut per_op_latency = BTreeMap::new();
    let mut latency = T::zero();
    let mut migrations = 0u64;
    let mut prev: Option<ComputeLoc> = None;
    for op in dag.topo_ops() {
        let cfg = effective_config(op, plan, dag)?;
        let lat = lut.get(&op.id, cfg)?;
        per_op_latency.insert(op.id.clone(), lat);
        latency = latency + lat;
        if let Some(p) = prev {
            if p != cfg.compute {
                migrations += 1;
            }
        }
        prev = Some(cfg.compute);
    }
    latency = latency + T::from_count(migrations) * platform.migration_overhead_s;

    let mut host_bytes = 0u64;
    let mut remote_bytes = 0u64;
    for t in dag.tensors() {
        match plan.placement[&t.id] {
            Placement::Local => host_bytes += t.size_bytes,
            Placement::Remote => remote_bytes += t.size_bytes,
        }
    }
    let total = host_bytes + remote_bytes;
    let remote_fraction = if total == 0 {
        T::zero()
    } else {
        T::from_count(remote_bytes) / T::from_count(total)
    };
    Ok(SimReport { latency_s: latency, host_bytes, remote_fraction, migrations, per_op_latency })
}

/// Whole-plan weighted-sum cost; the global counterpart of the per-op cost.
pub fn plan_objective<T: Scalar>(report: &SimReport<T>, obj: &Objective<T>) -> T {
    obj.scalarize(report.latency_s, report.host_bytes)
}

/// Diagnostic: tensors whose neighbors' plan-implied axes still disagree.
///
/// Rebuilds each op's effective configuration from the plan and re-runs
/// conflict detection. Always empty when every axis touches a single
/// tensor; ops with mixed multi-tensor axes can report disagreements that
/// are inherent to the per-axis table granularity rather than planner bugs.
pub fn detect_residual_conflicts(
    plan: &PlacementPlan,
    dag: &Dag,
) -> Result<Vec<String>, SimError> {
    let mut configs = BTreeMap::new();
    for op in dag.ops() {
        configs.insert(op.id.clone(), effective_config(op, plan, dag)?);
    }
    let report = crate::partition::detect_conflicts(&configs, dag);
    Ok(report.conflicts.into_iter().map(|c| c.tensor_id).collect())
}

// ── Exhaustive oracle ────────────────────────────────────────────────

/// Search-space guard for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_ops: usize,
    pub max_free_tensors: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_ops: 12, max_free_tensors: 20 }
    }
}

struct AxisPre {
    fixed_local: u64,
    fixed_remote: u64,
    /// (free-tensor bit, bytes).
    free: Vec<(u32, u64)>,
    is_weights_axis: bool,
    empty: bool,
}

impl AxisPre {
    fn build(
        ids: &[String],
        dag: &Dag,
        bit_of: &BTreeMap<&str, u32>,
        is_weights_axis: bool,
    ) -> Self {
        let mut fixed_local = 0;
        let mut fixed_remote = 0;
        let mut free = Vec::new();
        for id in ids {
            let t = dag.tensor(id).expect("dag references resolve");
            match t.pinned {
                Some(Placement::Local) => fixed_local += t.size_bytes,
                Some(Placement::Remote) => fixed_remote += t.size_bytes,
                None => free.push((bit_of[id.as_str()], t.size_bytes)),
            }
        }
        Self { fixed_local, fixed_remote, free, is_weights_axis, empty: ids.is_empty() }
    }

    /// Collapsed placement under a free-tensor mask (bit set = Local).
    fn collapse(&self, mask: u64) -> Placement {
        if self.is_weights_axis && self.empty {
            return Placement::Local;
        }
        let mut local = self.fixed_local;
        let mut remote = self.fixed_remote;
        for &(bit, bytes) in &self.free {
            if mask >> bit & 1 == 1 {
                local += bytes;
            } else {
                remote += bytes;
            }
        }
        collapse_axis(local, remote)
    }
}

struct Candidate<T> {
    cost: T,
    mask: u64,
    seq: Vec<ComputeLoc>,
    axes: Vec<[Placement; 3]>,
}

impl<T: Scalar> Candidate<T> {
    /// Offload-preferring lexicographic order, mirroring the partitioner's
    /// tie-break: per op (Device before Host, then Remote before Local per
    /// axis), then per free tensor (Remote before Local).
    fn beats(&self, other: &Self) -> bool {
        debug_assert_eq!(self.cost, other.cost);
        for i in 0..self.seq.len() {
            let a = (
                self.seq[i] == ComputeLoc::Host,
                self.axes[i][0] == Placement::Local,
                self.axes[i][1] == Placement::Local,
                self.axes[i][2] == Placement::Local,
            );
            let b = (
                other.seq[i] == ComputeLoc::Host,
                other.axes[i][0] == Placement::Local,
                other.axes[i][1] == Placement::Local,
                other.axes[i][2] == Placement::Local,
            );
            if a != b {
                return a < b;
            }
        }
        self.mask.count_ones() < other.mask.count_ones()
            || (self.mask.count_ones() == other.mask.count_ones() && self.mask < other.mask)
    }
}

/// Globally optimal plan for one objective. See [`oracle_sweep`].
pub fn oracle<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
    platform: &PlatformSpec<T>,
) -> Result<(PlacementPlan, T), SimError> {
    oracle_with_limits(dag, lut, obj, platform, OracleLimits::default())
}

pub fn oracle_with_limits<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
    platform: &PlatformSpec<T>,
    limits: OracleLimits,
) -> Result<(PlacementPlan, T), SimError> {
    let mut v = oracle_sweep(dag, lut, std::slice::from_ref(obj), platform, limits)?;
    Ok(v.pop().expect("one objective in, one plan out"))
}

/// Exhaustive minimization of the plan objective over every joint
/// assignment of per-tensor placements (consistent with pins) and per-op
/// compute locations, shared across a set of objectives.
///
/// Placements are enumerated outright; for each placement assignment the
/// optimal compute sequence is recovered exactly by dynamic programming
/// over the topological order (per-op latency depends only on that op's
/// compute location, migration cost only on consecutive pairs). Ties prefer
/// offload in the same order as the partitioner. Exponential in tensor
/// count, hence the limits.
pub fn oracle_sweep<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    objectives: &[Objective<T>],
    platform: &PlatformSpec<T>,
    limits: OracleLimits,
) -> Result<Vec<(PlacementPlan, T)>, SimError> {
    let free_ids: Vec<&str> = dag
        .tensors()
        .iter()
        .filter(|t| t.pinned.is_none())
        .map(|t| t.id.as_str())
        .collect();
    if dag.ops().len() > limits.max_ops || free_ids.len() > limits.max_free_tensors {
        return Err(SimError::TooLarge {
            ops: dag.ops().len(),
            max_ops: limits.max_ops,
            free_tensors: free_ids.len(),
            max_free_tensors: limits.max_free_tensors,
        });
    }
    validate_lut(lut, dag).into_result().map_err(SimError::from)?;

    let bit_of: BTreeMap<&str, u32> =
        free_ids.iter().enumerate().map(|(i, &id)| (id, i as u32)).collect();
    let free_bytes: Vec<u64> =
        free_ids.iter().map(|&id| dag.tensor(id).unwrap().size_bytes).collect();
    let pinned_local: u64 = dag
        .tensors()
        .iter()
        .filter(|t| t.pinned == Some(Placement::Local))
        .map(|t| t.size_bytes)
        .sum();

    let topo: Vec<&OpNode> = dag.topo_ops().collect();
    let n = topo.len();
    // Prefetch latencies; unused cells (weights axis of weightless ops) stay NaN.
    let mut lat = vec![[T::nan(); OpConfig::COUNT]; n];
    let mut axes_pre = Vec::with_capacity(n);
    for (i, op) in topo.iter().enumerate() {
        for cfg in crate::platform::lut_configs(op) {
            lat[i][cfg.index()] = lut.get(&op.id, cfg)?;
        }
        axes_pre.push([
            AxisPre::build(&op.weight_ids, dag, &bit_of, true),
            AxisPre::build(&op.input_ids, dag, &bit_of, false),
            AxisPre::build(&op.output_ids, dag, &bit_of, false),
        ]);
    }

    let mo = platform.migration_overhead_s;
    let mut best: Vec<Option<Candidate<T>>> = objectives.iter().map(|_| None).collect();
    let mut axes = vec![[Placement::Local; 3]; n];
    let mut op_lat = vec![[T::zero(); 2]; n]; // [Host, Device] per op
    let mut suffix = vec![[T::zero(); 2]; n];

    for mask in 0u64..(1u64 << free_ids.len()) {
        let mut host_bytes = pinned_local;
        for (bit, bytes) in free_bytes.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                host_bytes += bytes;
            }
        }
        for i in 0..n {
            let a = [
                axes_pre[i][0].collapse(mask),
                axes_pre[i][1].collapse(mask),
                axes_pre[i][2].collapse(mask),
            ];
            axes[i] = a;
            for (ci, compute) in [ComputeLoc::Host, ComputeLoc::Device].into_iter().enumerate() {
                let cfg = OpConfig { compute, weights: a[0], inputs: a[1], outputs: a[2] };
                op_lat[i][ci] = lat[i][cfg.index()];
            }
        }

        // Suffix DP over the compute sequence, then forward reconstruction
        // preferring Device on ties.
        let seq: Vec<ComputeLoc> = if n == 0 {
            Vec::new()
        } else {
            suffix[n - 1] = op_lat[n - 1];
            for i in (0..n - 1).rev() {
                for c in 0..2 {
                    let stay = suffix[i + 1][c];
                    let hop = suffix[i + 1][1 - c] + mo;
                    suffix[i][c] = op_lat[i][c] + stay.min(hop);
                }
            }
            let mut seq = Vec::with_capacity(n);
            let mut prev = if suffix[0][1] <= suffix[0][0] { 1 } else { 0 };
            seq.push(prev);
            for i in 1..n {
                let host = suffix[i][0] + if prev == 0 { T::zero() } else { mo };
                let dev = suffix[i][1] + if prev == 1 { T::zero() } else { mo };
                prev = if dev <= host { 1 } else { 0 };
                seq.push(prev);
            }
            seq.into_iter()
                .map(|c| if c == 0 { ComputeLoc::Host } else { ComputeLoc::Device })
                .collect()
        };

        // Canonical latency, accumulated exactly like `simulate`.
        let canonical = |seq: &[ComputeLoc]| -> T {
            let mut latency = T::zero();
            let mut migrations = 0u64;
            for i in 0..n {
                latency = latency + op_lat[i][(seq[i] == ComputeLoc::Device) as usize];
                if i > 0 && seq[i] != seq[i - 1] {
                    migrations += 1;
                }
            }
            latency + T::from_count(migrations) * mo
        };
        let latency_min = canonical(&seq);

        for (oi, obj) in objectives.iter().enumerate() {
            // alpha = 0 leaves compute unconstrained; the offload-preferring
            // tie-break then puts every op on the device.
            let (cand_seq, cand_latency) = if obj.alpha() == T::zero() {
                let all_dev = vec![ComputeLoc::Device; n];
                let l = canonical(&all_dev);
                (all_dev, l)
            } else {
                (seq.clone(), latency_min)
            };
            let cost = obj.scalarize(cand_latency, host_bytes);
            let replace = match &best[oi] {
                None => true,
                Some(b) => {
                    cost < b.cost
                        || (cost == b.cost
                            && Candidate { cost, mask, seq: cand_seq.clone(), axes: axes.clone() }
                                .beats(b))
                }
            };
            if replace {
                best[oi] = Some(Candidate { cost, mask, seq: cand_seq, axes: axes.clone() });
            }
        }
    }

    let mut out = Vec::with_capacity(objectives.len());
    for cand in best {
        let cand = cand.expect("mask loop runs at least once");
        let mut plan = PlacementPlan::default();
        for (i, op) in topo.iter().enumerate() {
            plan.compute.insert(op.id.clone(), cand.seq[i]);
        }
        for t in dag.tensors() {
            let p = match t.pinned {
                Some(p) => p,
                None => {
                    if cand.mask >> bit_of[t.id.as_str()] & 1 == 1 {
                        Placement::Local
                    } else {
                        Placement::Remote
                    }
                }
            };
            plan.placement.insert(t.id.clone(), p);
        }
        out.push((plan, cand.cost));
    }
    Ok(out)
}

// ── File format ──────────────────────────────────────────────────────

/// Flat key-value rendering of a report.
pub fn report_to_string<T: Scalar>(report: &SimReport<T>) -> String {
    format!(
        "latency_s={}\nhost_bytes={}\nremote_fraction={}\nmigrations={}\n",
        report.latency_s, report.host_bytes, report.remote_fraction, report.migrations
    )
}

/// Per-op latencies as delimited rows.
pub fn per_op_latency_csv<T: Scalar>(report: &SimReport<T>) -> String {
    let mut out = String::from("op_id,latency_s\n");
    for (id, lat) in &report.per_op_latency {
        out.push_str(&format!("{id},{lat}\n"));
    }
    out
}

pub fn save_report<T: Scalar>(
    report: &SimReport<T>,
    path: impl AsRef<Path>,
) -> Result<(), SimError> {
    std::fs::write(path, report_to_string(report)).map_err(|e| SimError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dag, gen_synthetic, SizeProfile, SyntheticShape, TensorKind, TensorSpec};
    use crate::partition::{fixed_policy, partition, PlacementPolicy};
    use crate::platform::{build_lut_synthetic, default_platform, LutProvenance, PlatformName};

    fn chain2() -> Dag {
        let ops = vec![
            OpNode::new("op0", "a").with_flops(1).with_inputs(&["x"]).with_outputs(&["t"]),
            OpNode::new("op1", "b").with_flops(1).with_inputs(&["t"]).with_outputs(&["y"]),
        ];
        let tensors = vec![
            TensorSpec::new("x", TensorKind::ExternalInput, 100),
            TensorSpec::new("t", TensorKind::Intermediate, 200),
            TensorSpec::new("y", TensorKind::ExternalOutput, 300),
        ];
        build_dag(ops, tensors).unwrap()
    }

    fn lut_with(vals: &[(&str, f64)]) -> PerfLut<f64> {
        let mut lut = PerfLut::new(LutProvenance::Measured("test".into()));
        for (op, lat) in vals {
            for cfg in OpConfig::enumerate() {
                if cfg.weights == Placement::Local {
                    lut.insert(*op, cfg, *lat);
                }
            }
        }
        lut
    }

    fn host_plan(dag: &Dag, placement: Placement) -> PlacementPlan {
        let mut plan = PlacementPlan::default();
        for op in dag.ops() {
            plan.compute.insert(op.id.clone(), ComputeLoc::Host);
        }
        for t in dag.tensors() {
            plan.placement.insert(t.id.clone(), placement);
        }
        plan
    }

    #[test]
    fn empty_dag_simulates_to_zero() {
        let dag = build_dag(vec![], vec![]).unwrap();
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let lut = build_lut_synthetic(&dag, &p);
        let report = simulate(&dag, &PlacementPlan::default(), &lut, &p).unwrap();
        assert_eq!(report.latency_s, 0.0);
        assert_eq!(report.migrations, 0);
        assert_eq!(report.remote_fraction, 0.0);
        assert_eq!(report.host_bytes, 0);
    }

    #[test]
    fn two_op_chain_sums_latencies() {
        let dag = chain2();
        let lut = lut_with(&[("op0", 1.0), ("op1", 2.0)]);
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let report = simulate(&dag, &host_plan(&dag, Placement::Local), &lut, &p).unwrap();
        assert_eq!(report.latency_s, 3.0);
        assert_eq!(report.migrations, 0);
        assert_eq!(report.host_bytes, 600);
        assert_eq!(report.remote_fraction, 0.0);
    }

    #[test]
    fn migration_charged_between_consecutive_ops() {
        let dag = chain2();
        let lut = lut_with(&[("op0", 1.0), ("op1", 2.0)]);
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let mut plan = host_plan(&dag, Placement::Local);
        plan.compute.insert("op1".to_string(), ComputeLoc::Device);
        let report = simulate(&dag, &plan, &lut, &p).unwrap();
        assert_eq!(report.migrations, 1);
        assert!((report.latency_s - 3.000005).abs() < 1e-12, "got {}", report.latency_s);
    }

    #[test]
    fn missing_decision_is_invalid_plan() {
        let dag = chain2();
        let lut = lut_with(&[("op0", 1.0), ("op1", 2.0)]);
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let mut plan = host_plan(&dag, Placement::Local);
        plan.placement.remove("t");
        match simulate(&dag, &plan, &lut, &p) {
            Err(SimError::InvalidPlan(msg)) => assert!(msg.contains("\"t\"")),
            other => panic!("expected InvalidPlan, got {other:?}"),
        }
    }

    #[test]
    fn latency_reconstructs_from_per_op_rows() {
        let dag = gen_synthetic(SyntheticShape::Residual, 7, 3, &SizeProfile::default()).unwrap();
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let lut = build_lut_synthetic(&dag, &p);
        let obj = Objective::with_defaults(&dag, &lut, 0.5).unwrap();
        let plan = partition(&dag, &lut, &obj).unwrap();
        let report = simulate(&dag, &plan, &lut, &p).unwrap();
        let sum: f64 = report.per_op_latency.values().sum();
        let expect = sum + report.migrations as f64 * p.migration_overhead_s;
        assert!((report.latency_s - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn compute_flip_leaves_placement_quantities_alone() {
        let dag = gen_synthetic(SyntheticShape::Fanout, 6, 9, &SizeProfile::default()).unwrap();
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let lut = build_lut_synthetic(&dag, &p);
        let obj = Objective::with_defaults(&dag, &lut, 0.3).unwrap();
        let plan = partition(&dag, &lut, &obj).unwrap();
        let a = simulate(&dag, &plan, &lut, &p).unwrap();
        let b = simulate(&dag, &plan.with_compute_flipped(), &lut, &p).unwrap();
        assert_eq!(a.host_bytes, b.host_bytes);
        assert_eq!(a.remote_fraction, b.remote_fraction);
    }

    #[test]
    fn all_remote_never_beats_all_local_on_synthetic_luts() {
        for seed in 0..8 {
            let dag = gen_synthetic(SyntheticShape::Chain, 5, seed, &SizeProfile::default())
                .unwrap()
                .with_pins_cleared();
            let p = default_platform::<f64>(PlatformName::PlatformB);
            let lut = build_lut_synthetic(&dag, &p);
            let local = simulate(&dag, &fixed_policy(&dag, PlacementPolicy::AllLocal), &lut, &p)
                .unwrap();
            let remote = simulate(&dag, &fixed_policy(&dag, PlacementPolicy::AllRemote), &lut, &p)
                .unwrap();
            assert!(remote.latency_s >= local.latency_s);
        }
    }

    #[test]
    fn plan_objective_hand_values() {
        let report = SimReport {
            latency_s: 1.2,
            host_bytes: 10,
            remote_fraction: 0.9,
            migrations: 0,
            per_op_latency: BTreeMap::new(),
        };
        let obj = Objective::new(0.5f64, 1.0, 100.0).unwrap();
        assert!((plan_objective(&report, &obj) - 0.65).abs() < 1e-12);
        let pure_latency = Objective::new(1.0f64, 1.2, 100.0).unwrap();
        assert!((plan_objective(&report, &pure_latency) - 1.0).abs() < 1e-12);
        let pure_bytes = Objective::new(0.0f64, 1.0, 100.0).unwrap();
        let zero_host = SimReport { host_bytes: 0, ..report };
        assert_eq!(plan_objective(&zero_host, &pure_bytes), 0.0);
    }

    /// Test-only naive oracle: recursively enumerate every joint assignment
    /// and evaluate it through `simulate`. Independent of the fast path.
    fn naive_oracle_cost(
        dag: &Dag,
        lut: &PerfLut<f64>,
        obj: &Objective<f64>,
        platform: &PlatformSpec<f64>,
    ) -> f64 {
        let free: Vec<&str> = dag
            .tensors()
            .iter()
            .filter(|t| t.pinned.is_none())
            .map(|t| t.id.as_str())
            .collect();
        let ops: Vec<&str> = dag.ops().iter().map(|o| o.id.as_str()).collect();
        let mut best = f64::INFINITY;
        for mask in 0u64..(1 << free.len()) {
            for cmask in 0u64..(1 << ops.len()) {
                let mut plan = PlacementPlan::default();
                for t in dag.tensors() {
                    let p = t.pinned.unwrap_or_else(|| {
                        let bit = free.iter().position(|&f| f == t.id).unwrap();
                        if mask >> bit & 1 == 1 {
                            Placement::Local
                        } else {
                            Placement::Remote
                        }
                    });
                    plan.placement.insert(t.id.clone(), p);
                }
                for (i, id) in ops.iter().enumerate() {
                    let loc =
                        if cmask >> i & 1 == 1 { ComputeLoc::Device } else { ComputeLoc::Host };
                    plan.compute.insert(id.to_string(), loc);
                }
                let report = simulate(dag, &plan, lut, platform).unwrap();
                best = best.min(plan_objective(&report, obj));
            }
        }
        best
    }

    #[test]
    fn oracle_matches_naive_enumeration() {
        let p = default_platform::<f64>(PlatformName::PlatformB);
        for seed in 0..6 {
            for shape in [SyntheticShape::Chain, SyntheticShape::Fanout] {
                let dag = gen_synthetic(shape, 4, seed, &SizeProfile::default()).unwrap();
                let lut = build_lut_synthetic(&dag, &p);
                for alpha in [0.0, 0.35, 1.0] {
                    let obj = Objective::with_defaults(&dag, &lut, alpha).unwrap();
                    let (plan, cost) = oracle(&dag, &lut, &obj, &p).unwrap();
                    let naive = naive_oracle_cost(&dag, &lut, &obj, &p);
                    assert!(
                        (cost - naive).abs() <= 1e-12 * naive.max(1.0),
                        "shape {shape:?} seed {seed} alpha {alpha}: fast {cost} naive {naive}"
                    );
                    // Returned cost is reproducible through the public path.
                    let report = simulate(&dag, &plan, &lut, &p).unwrap();
                    let replayed = plan_objective(&report, &obj);
                    assert!((cost - replayed).abs() <= 1e-12 * replayed.max(1.0));
                }
            }
        }
    }

    #[test]
    fn oracle_dominates_policies_and_partitioner() {
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let dag = gen_synthetic(SyntheticShape::Residual, 5, 21, &SizeProfile::default()).unwrap();
        let lut = build_lut_synthetic(&dag, &p);
        for alpha in [0.0, 0.5, 1.0] {
            let obj = Objective::with_defaults(&dag, &lut, alpha).unwrap();
            let (_, oracle_cost) = oracle(&dag, &lut, &obj, &p).unwrap();
            let mut costs = Vec::new();
            for policy in PlacementPolicy::ALL {
                let r = simulate(&dag, &fixed_policy(&dag, policy), &lut, &p).unwrap();
                costs.push(plan_objective(&r, &obj));
            }
            let plan = partition(&dag, &lut, &obj).unwrap();
            let r = simulate(&dag, &plan, &lut, &p).unwrap();
            costs.push(plan_objective(&r, &obj));
            for c in costs {
                assert!(oracle_cost <= c + 1e-12, "alpha {alpha}: oracle {oracle_cost} vs {c}");
            }
        }
    }

    #[test]
    fn oracle_respects_pins() {
        let dag = gen_synthetic(SyntheticShape::Chain, 3, 8, &SizeProfile::default()).unwrap();
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let lut = build_lut_synthetic(&dag, &p);
        let obj = Objective::with_defaults(&dag, &lut, 0.0).unwrap();
        let (plan, _) = oracle(&dag, &lut, &obj, &p).unwrap();
        assert_eq!(plan.placement["x_in"], Placement::Local);
        assert_eq!(plan.placement["x_out"], Placement::Local);
    }

    #[test]
    fn oversized_dag_is_rejected() {
        let dag = gen_synthetic(SyntheticShape::Chain, 13, 0, &SizeProfile::default()).unwrap();
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let lut = build_lut_synthetic(&dag, &p);
        let obj = Objective::with_defaults(&dag, &lut, 0.5).unwrap();
        match oracle(&dag, &lut, &obj, &p) {
            Err(SimError::TooLarge { ops, max_ops, .. }) => {
                assert_eq!(ops, 13);
                assert_eq!(max_ops, 12);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn single_op_oracle_equals_partitioner_at_all_alphas() {
        let p = default_platform::<f64>(PlatformName::PlatformB);
        for seed in [0, 1, 2, 3] {
            let dag = gen_synthetic(SyntheticShape::Chain, 1, seed, &SizeProfile::default())
                .unwrap();
            let lut = build_lut_synthetic(&dag, &p);
            for i in 0..=10 {
                let alpha = i as f64 / 10.0;
                let obj = Objective::with_defaults(&dag, &lut, alpha).unwrap();
                let plan = partition(&dag, &lut, &obj).unwrap();
                let (oracle_plan, oracle_cost) = oracle(&dag, &lut, &obj, &p).unwrap();
                assert_eq!(plan, oracle_plan, "seed {seed} alpha {alpha}");
                let r = simulate(&dag, &plan, &lut, &p).unwrap();
                let cost = plan_objective(&r, &obj);
                assert!((cost - oracle_cost).abs() <= 1e-12 * cost.max(1.0));
            }
        }
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let dag = chain2();
        let lut = lut_with(&[("op0", 1.0), ("op1", 2.0)]);
        let p = default_platform::<f64>(PlatformName::PlatformB);
        let report = simulate(&dag, &host_plan(&dag, Placement::Remote), &lut, &p).unwrap();
        let s = report_to_string(&report);
        assert!(s.starts_with("latency_s=3\n"));
        assert!(s.contains("remote_fraction=1\n"));
        let csv = per_op_latency_csv(&report);
        assert_eq!(csv, "op_id,latency_s\nop0,1\nop1,2\n");
    }
}
