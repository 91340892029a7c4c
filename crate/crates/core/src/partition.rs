//! Offline, linear-runtime placement partitioner plus the fixed coarse-grain
//! placement policies.
//!
//! The partitioner works in three stages over a complete lookup table:
//! per-op weighted-sum cost minimization, detection of tensors whose
//! producer and consumers demanded different placements, and a single
//! deterministic resolution pass that settles each conflicted tensor by its
//! local neighborhood cost. Compute locations are chosen in the first stage
//! and never revisited.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Dag, GraphError, OpNode, TensorKind, TensorSpec};
use crate::platform::{lut_configs, OpConfig, PerfLut, PlatformError, StreamAxis};
use crate::{ComputeLoc, Placement, Scalar};

/// Weighted-sum objective: `alpha` trades inference latency (1.0) against
/// host-resident bytes (0.0). Both terms are normalized so alpha is
/// unitless and comparable across workloads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective<T> {
    alpha: T,
    latency_norm: T,
    bytes_norm: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error(transparent)]
    Lut(#[from] PlatformError),
    #[error("plan file row {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("plan file io: {0}")]
    Io(String),
}

impl<T: Scalar> Objective<T> {
    pub fn new(alpha: T, latency_norm: T, bytes_norm: T) -> Result<Self, PartitionError> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(PartitionError::InvalidObjective(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(latency_norm > T::zero()) || !(bytes_norm > T::zero()) {
            return Err(PartitionError::InvalidObjective(format!(
                "norms must be positive, got latency_norm={latency_norm} bytes_norm={bytes_norm}"
            )));
        }
        Ok(Self { alpha, latency_norm, bytes_norm })
    }

    /// Default normalization: the all-local/host-only plan latency and the
    /// total tensor footprint. Degenerate (zero) norms fall back to 1 so
    /// empty or zero-byte workloads still evaluate.
    pub fn with_defaults(dag: &Dag, lut: &PerfLut<T>, alpha: T) -> Result<Self, PartitionError> {
        let mut latency = T::zero();
        for op in dag.topo_ops() {
            latency = latency + lut.get(&op.id, OpConfig::all_local(ComputeLoc::Host))?;
        }
        let latency_norm = if latency > T::zero() { latency } else { T::one() };
        let total = dag.total_bytes();
        let bytes_norm = if total > 0 { T::from_count(total) } else { T::one() };
        Self::new(alpha, latency_norm, bytes_norm)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn latency_norm(&self) -> T {
        self.latency_norm
    }

    pub fn bytes_norm(&self) -> T {
        self.bytes_norm
    }

    /// The scalarization itself: both callers (per-op cost, whole-plan cost)
    /// funnel through this one expression.
    pub fn scalarize(&self, latency_s: T, host_bytes: u64) -> T {
        self.alpha * (latency_s / self.latency_norm)
            + (T::one() - self.alpha) * (T::from_count(host_bytes) / self.bytes_norm)
    }
}

/// Per-op compute location and per-tensor placement; the planner's output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlacementPlan {
    pub compute: BTreeMap<String, ComputeLoc>,
    pub placement: BTreeMap<String, Placement>,
}

impl PlacementPlan {
    /// Every op and tensor decided exactly once, pins respected.
    pub fn is_valid_for(&self, dag: &Dag) -> bool {
        dag.ops().iter().all(|op| self.compute.contains_key(&op.id))
            && dag.tensors().iter().all(|t| match self.placement.get(&t.id) {
                Some(&p) => t.pinned.map_or(true, |pin| pin == p),
                None => false,
            })
            && self.compute.len() == dag.ops().len()
            && self.placement.len() == dag.tensors().len()
    }

    /// Copy with every compute decision flipped (placements untouched).
    #[must_use]
    pub fn with_compute_flipped(&self) -> Self {
        Self {
            compute: self.compute.iter().map(|(k, v)| (k.clone(), v.flipped())).collect(),
            placement: self.placement.clone(),
        }
    }
}

/// Host-DRAM bytes attributed to an op under a configuration: its weights
/// when they stay local plus its produced outputs when they stay local.
/// Consumed inputs are attributed to their producer so every tensor is
/// counted once globally.
pub fn host_attributed_bytes(op: &OpNode, cfg: OpConfig, dag: &Dag) -> u64 {
    let mut bytes = 0;
    if cfg.weights == Placement::Local {
        bytes += dag.bytes_of(&op.weight_ids);
    }
    if cfg.outputs == Placement::Local {
        bytes += dag.bytes_of(&op.output_ids);
    }
    bytes
}

/// Weighted-sum cost of running `op` under `cfg`.
pub fn op_cost<T: Scalar>(
    op: &OpNode,
    cfg: OpConfig,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
    dag: &Dag,
) -> Result<T, PartitionError> {
    let latency = lut.get(&op.id, cfg)?;
    Ok(obj.scalarize(latency, host_attributed_bytes(op, cfg, dag)))
}

/// If every tensor on an axis is pinned to the same placement, the axis is
/// locked to it; otherwise the selection is free to choose.
fn axis_lock(dag: &Dag, ids: &[String]) -> Option<Placement> {
    let mut lock = None;
    for id in ids {
        match dag.tensor(id).and_then(|t| t.pinned) {
            None => return None,
            Some(p) => match lock {
                None => lock = Some(p),
                Some(prev) if prev != p => return None,
                Some(_) => {}
            },
        }
    }
    lock
}

/// Configurations an op may select: the canonical table configs restricted
/// by unanimous pins on each axis.
fn selectable_configs(op: &OpNode, dag: &Dag) -> Vec<OpConfig> {
    let w_lock = axis_lock(dag, &op.weight_ids);
    let i_lock = axis_lock(dag, &op.input_ids);
    let o_lock = axis_lock(dag, &op.output_ids);
    lut_configs(op)
        .into_iter()
        .filter(|cfg| {
            w_lock.map_or(true, |p| cfg.weights == p)
                && i_lock.map_or(true, |p| cfg.inputs == p)
                && o_lock.map_or(true, |p| cfg.outputs == p)
        })
        .collect()
}

/// Stage 1: independently pick each op's argmin-cost configuration.
///
/// Ties prefer offload (Device compute, Remote placements) via
/// [`OpConfig::offload_rank`], making the selection fully deterministic.
pub fn per_op_select<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
) -> Result<BTreeMap<String, OpConfig>, PartitionError> {
    let mut selected = BTreeMap::new();
    for op in dag.topo_ops() {
        let mut best: Option<(T, OpConfig)> = None;
        for cfg in selectable_configs(op, dag) {
            let cost = op_cost(op, cfg, lut, obj, dag)?;
            let better = match best {
                None => true,
                Some((c, b)) => cost < c || (cost == c && cfg.offload_rank() < b.offload_rank()),
            };
            if better {
                best = Some((cost, cfg));
            }
        }
        let (_, cfg) = best.expect("ops always have at least one selectable config");
        selected.insert(op.id.clone(), cfg);
    }
    Ok(selected)
}

/// One tensor whose neighbors demanded different placements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorConflict {
    pub tensor_id: String,
    /// Producing op and its outputs-axis demand, when the tensor is produced.
    pub producer: Option<(String, Placement)>,
    /// Consuming ops and their demands (inputs axis, or weights axis for
    /// weight tensors).
    pub consumers: Vec<(String, Placement)>,
    pub pin: Option<Placement>,
}

impl TensorConflict {
    /// Producer first, then consumers: the ops whose configs touch this
    /// tensor.
    fn neighbor_ids(&self) -> Vec<&str> {
        self.producer
            .iter()
            .map(|(p, _)| p.as_str())
            .chain(self.consumers.iter().map(|(c, _)| c.as_str()))
            .collect()
    }

    fn distinct_demands(&self) -> usize {
        let mut local = false;
        let mut remote = false;
        let mut mark = |p: Placement| match p {
            Placement::Local => local = true,
            Placement::Remote => remote = true,
        };
        if let Some((_, p)) = self.producer {
            mark(p);
        }
        for &(_, p) in &self.consumers {
            mark(p);
        }
        if let Some(p) = self.pin {
            mark(p);
        }
        local as usize + remote as usize
    }
}

/// Conflicted tensors in resolution order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub conflicts: Vec<TensorConflict>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }
}

/// The stream axis through which `op` touches tensor `t`.
fn touching_axis(op: &OpNode, t: &TensorSpec) -> StreamAxis {
    if t.kind == TensorKind::Weight {
        StreamAxis::Weights
    } else if op.output_ids.contains(&t.id) {
        StreamAxis::Outputs
    } else {
        StreamAxis::Inputs
    }
}

fn demands_for<'d>(
    t: &TensorSpec,
    raw: &BTreeMap<String, OpConfig>,
    dag: &'d Dag,
) -> TensorConflict {
    let producer = t.producer.as_ref().map(|p| (p.clone(), raw[p].outputs));
    let consumers = t
        .consumers
        .iter()
        .map(|c| {
            let op = dag.op(c).expect("consumer exists");
            let cfg = raw[c];
            let demand = match touching_axis(op, t) {
                StreamAxis::Weights => cfg.weights,
                StreamAxis::Inputs => cfg.inputs,
                StreamAxis::Outputs => cfg.outputs,
            };
            (c.clone(), demand)
        })
        .collect();
    TensorConflict { tensor_id: t.id.clone(), producer, consumers, pin: t.pinned }
}

/// Position used to order conflicted tensors: the producer's topological
/// index, or the earliest consumer's for producerless tensors.
fn anchor_index(t: &TensorSpec, dag: &Dag) -> usize {
    t.producer
        .as_ref()
        .and_then(|p| dag.topo_index(p))
        .or_else(|| t.consumers.iter().filter_map(|c| dag.topo_index(c)).min())
        .unwrap_or(usize::MAX)
}

/// Stage 2: find every tensor whose demanded placements disagree.
///
/// A demand comes from the producer's outputs axis, each consumer's inputs
/// axis (weights axis for weight tensors), and the pin when present.
pub fn detect_conflicts(raw: &BTreeMap<String, OpConfig>, dag: &Dag) -> ConflictReport {
    let mut with_anchor: Vec<(usize, usize, TensorConflict)> = Vec::new();
    for (idx, t) in dag.tensors().iter().enumerate() {
        let demands = demands_for(t, raw, dag);
        if demands.distinct_demands() >= 2 {
            with_anchor.push((anchor_index(t, dag), idx, demands));
        }
    }
    with_anchor.sort_by_key(|&(anchor, idx, _)| (anchor, idx));
    ConflictReport { conflicts: with_anchor.into_iter().map(|(_, _, c)| c).collect() }
}

/// Stage 3: settle each conflicted tensor and assemble the plan.
///
/// Pinned tensors take their pin unconditionally, so their placements are
/// written into the working configurations up front. The remaining
/// conflicts are visited in [`detect_conflicts`] order: the placement
/// minimizing the summed cost of the producer and all consumers wins (tie
/// goes to Remote), and the choice is written into each neighbor's working
/// configuration before the next tensor is processed, so later evaluations
/// price earlier decisions. Non-conflicted tensors keep the placement their
/// neighbors agreed on at detection time; unpinned tensors nothing demands
/// default to Remote.
pub fn resolve_conflicts<T: Scalar>(
    raw: &BTreeMap<String, OpConfig>,
    report: &ConflictReport,
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
) -> Result<PlacementPlan, PartitionError> {
    let mut configs = raw.clone();
    let mut placement: BTreeMap<String, Placement> = BTreeMap::new();

    // Agreement snapshot for tensors outside the report.
    for t in dag.tensors() {
        let demands = demands_for(t, raw, dag);
        if demands.distinct_demands() >= 2 {
            continue;
        }
        let agreed = demands
            .producer
            .map(|(_, p)| p)
            .or_else(|| demands.consumers.first().map(|&(_, p)| p))
            .or(demands.pin)
            .unwrap_or(Placement::Remote);
        placement.insert(t.id.clone(), agreed);
    }

    let write_back = |configs: &mut BTreeMap<String, OpConfig>,
                      neighbors: &[&str],
                      t: &TensorSpec,
                      chosen: Placement| {
        for &nid in neighbors {
            let op = dag.op(nid).expect("neighbor exists");
            let axis = touching_axis(op, t);
            let cfg = configs.get_mut(nid).expect("neighbor has a config");
            *cfg = cfg.with_axis(axis, chosen);
        }
    };
    // Pins are not decisions; settle them before pricing anything.
    for conflict in &report.conflicts {
        let t = dag.tensor(&conflict.tensor_id).expect("conflict names a tensor");
        if let Some(pin) = t.pinned {
            placement.insert(t.id.clone(), pin);
            write_back(&mut configs, &conflict.neighbor_ids(), t, pin);
        }
    }

    for conflict in &report.conflicts {
        let t = dag.tensor(&conflict.tensor_id).expect("conflict names a tensor");
        if t.pinned.is_some() {
            continue;
        }
        let neighbors = conflict.neighbor_ids();
        let neighborhood_cost = |p: Placement| -> Result<T, PartitionError> {
            let mut sum = T::zero();
            for &nid in &neighbors {
                let op = dag.op(nid).expect("neighbor exists");
                let cfg = configs[nid].with_axis(touching_axis(op, t), p);
                sum = sum + op_cost(op, cfg, lut, obj, dag)?;
            }
            Ok(sum)
        };
        let local = neighborhood_cost(Placement::Local)?;
        let remote = neighborhood_cost(Placement::Remote)?;
        let chosen = if remote <= local { Placement::Remote } else { Placement::Local };
        placement.insert(t.id.clone(), chosen);
        write_back(&mut configs, &neighbors, t, chosen);
    }

    // Pins always win, demanded or not.
    for t in dag.tensors() {
        if let Some(pin) = t.pinned {
            placement.insert(t.id.clone(), pin);
        }
    }

    let compute = configs.iter().map(|(id, cfg)| (id.clone(), cfg.compute)).collect();
    Ok(PlacementPlan { compute, placement })
}

/// The full partitioning pipeline: select, detect, resolve.
pub fn partition<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
) -> Result<PlacementPlan, PartitionError> {
    partition_with_passes(dag, lut, obj, 1)
}

/// Partition with up to `max_passes` detect/resolve rounds (capped at the
/// tensor count). Extra passes re-examine tensors whose neighborhoods were
/// rewritten by earlier resolutions; the single-pass default is the
/// production configuration.
pub fn partition_with_passes<T: Scalar>(
    dag: &Dag,
    lut: &PerfLut<T>,
    obj: &Objective<T>,
    max_passes: usize,
) -> Result<PlacementPlan, PartitionError> {
    crate::platform::validate_lut(lut, dag).into_result()?;
    let mut configs = per_op_select(dag, lut, obj)?;
    let passes = max_passes.clamp(1, dag.tensors().len().max(1));
    let mut plan = PlacementPlan::default();
    for pass in 0..passes {
        let report = detect_conflicts(&configs, dag);
        let done = report.is_empty();
        plan = resolve_conflicts(&configs, &report, dag, lut, obj)?;
        if done && pass > 0 {
            break;
        }
        if done {
            break;
        }
        // Re-derive the working configs implied by the resolved plan for the
        // next round.
        for (id, cfg) in configs.iter_mut() {
            let op = dag.op(id).expect("op exists");
            let mut next = *cfg;
            for tid in op.output_ids.iter().chain(&op.input_ids).chain(&op.weight_ids) {
                let t = dag.tensor(tid).expect("tensor exists");
                if let Some(&p) = plan.placement.get(tid) {
                    next = next.with_axis(touching_axis(op, t), p);
                }
            }
            *cfg = next;
        }
    }
    Ok(plan)
}

// ── Fixed coarse-grain policies ──────────────────────────────────────

/// Whole-workload placement policies used as baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementPolicy {
    AllLocal,
    AllRemote,
    WeightRemote,
    ResultRemote,
}

impl PlacementPolicy {
    pub const ALL: [Self; 4] =
        [Self::AllLocal, Self::AllRemote, Self::WeightRemote, Self::ResultRemote];
}

impl std::fmt::Display for PlacementPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::AllLocal => "ALL_LOCAL",
            Self::AllRemote => "ALL_REMOTE",
            Self::WeightRemote => "WEIGHT_REMOTE",
            Self::ResultRemote => "RESULT_REMOTE",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for PlacementPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ALL_LOCAL" => Ok(Self::AllLocal),
            "ALL_REMOTE" => Ok(Self::AllRemote),
            "WEIGHT_REMOTE" => Ok(Self::WeightRemote),
            "RESULT_REMOTE" => Ok(Self::ResultRemote),
            other => Err(format!(
                "unknown policy {other:?}, expected ALL_LOCAL|ALL_REMOTE|WEIGHT_REMOTE|RESULT_REMOTE"
            )),
        }
    }
}

/// Apply a fixed policy: compute stays on the host, tensor placement follows
/// the policy, pins override.
pub fn fixed_policy(dag: &Dag, policy: PlacementPolicy) -> PlacementPlan {
    let compute = dag.ops().iter().map(|op| (op.id.clone(), ComputeLoc::Host)).collect();
    let placement = dag
        .tensors()
        .iter()
        .map(|t| {
            let by_policy = match policy {
                PlacementPolicy::AllLocal => Placement::Local,
                PlacementPolicy::AllRemote => Placement::Remote,
                PlacementPolicy::WeightRemote => {
                    if t.kind == TensorKind::Weight {
                        Placement::Remote
                    } else {
                        Placement::Local
                    }
                }
                PlacementPolicy::ResultRemote => {
                    if t.kind == TensorKind::Weight {
                        Placement::Local
                    } else {
                        Placement::Remote
                    }
                }
            };
            (t.id.clone(), t.pinned.unwrap_or(by_policy))
        })
        .collect();
    PlacementPlan { compute, placement }
}

// ── File format ──────────────────────────────────────────────────────

pub const PLAN_HEADER: &str = "kind,id,decision";

/// Render a plan: ops in topological order, then tensors by id.
pub fn plan_to_string(plan: &PlacementPlan, dag: &Dag) -> String {
    let mut out = String::from(PLAN_HEADER);
    out.push('\n');
    for op in dag.topo_ops() {
        if let Some(loc) = plan.compute.get(&op.id) {
            out.push_str(&format!("op,{},{loc}\n", op.id));
        }
    }
    for (id, p) in &plan.placement {
        out.push_str(&format!("tensor,{id},{p}\n"));
    }
    out
}

pub fn plan_from_str(s: &str) -> Result<PlacementPlan, PartitionError> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PLAN_HEADER => {}
        Some((_, h)) => {
            return Err(PartitionError::Parse {
                line: 1,
                reason: format!("bad header {h:?}, expected {PLAN_HEADER:?}"),
            })
        }
        None => return Err(PartitionError::Parse { line: 1, reason: "empty file".into() }),
    }
    let mut plan = PlacementPlan::default();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(PartitionError::Parse {
                line: row,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let err = |reason: String| PartitionError::Parse { line: row, reason };
        match fields[0] {
            "op" => {
                let loc: ComputeLoc = fields[2].parse().map_err(err)?;
                plan.compute.insert(fields[1].to_string(), loc);
            }
            "tensor" => {
                let p: Placement = fields[2].parse().map_err(err)?;
                plan.placement.insert(fields[1].to_string(), p);
            }
            other => {
                return Err(PartitionError::Parse {
                    line: row,
                    reason: format!("unknown kind {other:?}, expected op|tensor"),
                })
            }
        }
    }
    Ok(plan)
}

pub fn save_plan(
    plan: &PlacementPlan,
    dag: &Dag,
    path: impl AsRef<Path>,
) -> Result<(), PartitionError> {
    std::fs::write(path, plan_to_string(plan, dag)).map_err(|e| PartitionError::Io(e.to_string()))
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<PlacementPlan, PartitionError> {
    let s = std::fs::read_to_string(&path)
        .map_err(|e| PartitionError::Io(format!("{}: {e}", path.as_ref().display())))?;
    plan_from_str(&s)
}

/// Convenience: generate a DAG error as a `PartitionError` (used by callers
/// that mix graph and partition fallibility).
impl From<GraphError> for PartitionError {
    fn from(e: GraphError) -> Self {
        PartitionError::Io(e.to_string())
    }
}
