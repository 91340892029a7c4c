//! Computation-DAG data model: operations, weight/intermediate tensors,
//! dependencies, plus deterministic synthetic workload generators and the
//! JSON on-disk format.
//!
//! A [`Dag`] is immutable after [`build_dag`]; construction validates all
//! references, recomputes the producer/consumer linkage from the operation
//! lists, and caches a topological order.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Placement;

/// What role a tensor plays in the workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TensorKind {
    /// Read-only model parameters.
    Weight,
    /// Activation buffer produced by one op and consumed by successors.
    Intermediate,
    /// Request data arriving from outside the graph.
    ExternalInput,
    /// Result data leaving the graph.
    ExternalOutput,
}

impl TensorKind {
    /// Whether tensors of this kind are produced by an operation.
    pub fn is_produced(self) -> bool {
        matches!(self, Self::Intermediate | Self::ExternalOutput)
    }
}

/// A tensor: sized, typed, linked to the ops that produce and consume it.
///
/// `producer` and `consumers` are derived fields: [`build_dag`] recomputes
/// them from the operations' `weight_ids`/`input_ids`/`output_ids` lists, so
/// hand-built specs may leave them empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub id: String,
    pub kind: TensorKind,
    pub size_bytes: u64,
    pub producer: Option<String>,
    pub consumers: BTreeSet<String>,
    /// Forced placement, or `None` when the planner is free to choose.
    pub pinned: Option<Placement>,
}

impl TensorSpec {
    pub fn new(id: impl Into<String>, kind: TensorKind, size_bytes: u64) -> Self {
        Self {
            id: id.into(),
            kind,
            size_bytes,
            producer: None,
            consumers: BTreeSet::new(),
            pinned: None,
        }
    }

    #[must_use]
    pub fn pinned_to(mut self, placement: Placement) -> Self {
        self.pinned = Some(placement);
        self
    }
}

/// One operation (layer) of the workload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpNode {
    pub id: String,
    /// Free-form operation kind, e.g. `"matmul"`. Informational only.
    pub label: String,
    /// Floating-point operation count.
    pub flops: u64,
    /// Latency-bound (pointer-chasing) access count.
    pub random_accesses: u64,
    pub weight_ids: Vec<String>,
    pub input_ids: Vec<String>,
    pub output_ids: Vec<String>,
}

impl OpNode {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            flops: 0,
            random_accesses: 0,
            weight_ids: Vec::new(),
            input_ids: Vec::new(),
            output_ids: Vec::new(),
        }
    }

    #[must_use]
    pub fn with_flops(mut self, flops: u64) -> Self {
        self.flops = flops;
        self
    }

    #[must_use]
    pub fn with_random_accesses(mut self, n: u64) -> Self {
        self.random_accesses = n;
        self
    }

    #[must_use]
    pub fn with_weights(mut self, ids: &[&str]) -> Self {
        self.weight_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    #[must_use]
    pub fn with_inputs(mut self, ids: &[&str]) -> Self {
        self.input_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    #[must_use]
    pub fn with_outputs(mut self, ids: &[&str]) -> Self {
        self.output_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn has_weights(&self) -> bool {
        !self.weight_ids.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("op {referrer:?} references unknown tensor {missing:?}")]
    DanglingReference { referrer: String, missing: String },
    #[error("op {op:?} references tensor {tensor:?} more than once")]
    DuplicateReference { op: String, tensor: String },
    #[error("tensor {tensor:?} produced by both {first:?} and {second:?}")]
    DuplicateProducer { tensor: String, first: String, second: String },
    #[error("tensor {tensor:?} of kind {kind:?} has no producer op")]
    MissingProducer { tensor: String, kind: TensorKind },
    #[error("op {op:?} uses tensor {tensor:?} of kind {kind:?} in its {list} list")]
    KindMismatch { op: String, tensor: String, kind: TensorKind, list: &'static str },
    #[error("dependency cycle through op {0:?}")]
    CycleDetected(String),
    #[error("invalid synthetic shape parameters: {0}")]
    InvalidShapeParams(String),
    #[error("dag file: {0}")]
    Io(String),
    #[error("dag file parse: {0}")]
    Parse(String),
}

/// A validated, immutable computation DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    ops: Vec<OpNode>,
    tensors: Vec<TensorSpec>,
    /// Topological order as indices into `ops`.
    topo: Vec<usize>,
    op_index: HashMap<String, usize>,
    tensor_index: HashMap<String, usize>,
    /// Generator seed, kept for the file format's `meta.seed`.
    seed: Option<u64>,
}

impl Dag {
    pub fn ops(&self) -> &[OpNode] {
        &self.ops
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn op(&self, id: &str) -> Option<&OpNode> {
        self.op_index.get(id).map(|&i| &self.ops[i])
    }

    pub fn tensor(&self, id: &str) -> Option<&TensorSpec> {
        self.tensor_index.get(id).map(|&i| &self.tensors[i])
    }

    /// Operations in topological order.
    pub fn topo_ops(&self) -> impl Iterator<Item = &OpNode> {
        self.topo.iter().map(|&i| &self.ops[i])
    }

    /// Topological order as op ids.
    pub fn topo_ids(&self) -> Vec<&str> {
        self.topo.iter().map(|&i| self.ops[i].id.as_str()).collect()
    }

    /// Position of an op in the topological order.
    pub fn topo_index(&self, op_id: &str) -> Option<usize> {
        let idx = *self.op_index.get(op_id)?;
        self.topo.iter().position(|&i| i == idx)
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty() && self.tensors.is_empty()
    }

    /// Total footprint: every tensor counted exactly once.
    pub fn total_bytes(&self) -> u64 {
        self.tensors.iter().map(|t| t.size_bytes).sum()
    }

    /// Sum of `size_bytes` over a list of tensor ids. Ids are assumed valid.
    pub(crate) fn bytes_of(&self, ids: &[String]) -> u64 {
        ids.iter()
            .map(|id| self.tensor(id).map_or(0, |t| t.size_bytes))
            .sum()
    }

    /// Copy of this DAG with every pin cleared.
    #[must_use]
    pub fn with_pins_cleared(&self) -> Self {
        let mut tensors = self.tensors.clone();
        for t in &mut tensors {
            t.pinned = None;
        }
        let mut dag = self.clone();
        dag.tensors = tensors;
        dag
    }
}

/// Convenience free function mirroring [`Dag::total_bytes`].
pub fn total_bytes(dag: &Dag) -> u64 {
    dag.total_bytes()
}

/// Validate a set of operations and tensors and assemble a [`Dag`].
///
/// Recomputes each tensor's `producer`/`consumers` from the op lists,
/// rejects dangling or duplicated references, kind mismatches, multiple
/// producers, and dependency cycles, and caches a topological order
/// (Kahn's algorithm, stable in op declaration order).
pub fn build_dag(ops: Vec<OpNode>, tensors: Vec<TensorSpec>) -> Result<Dag, GraphError> {
    build_dag_seeded(ops, tensors, None)
}

fn build_dag_seeded(
    ops: Vec<OpNode>,
    mut tensors: Vec<TensorSpec>,
    seed: Option<u64>,
) -> Result<Dag, GraphError> {
    let mut op_index = HashMap::with_capacity(ops.len());
    for (i, op) in ops.iter().enumerate() {
        if op_index.insert(op.id.clone(), i).is_some() {
            return Err(GraphError::DuplicateId(op.id.clone()));
        }
    }
    let mut tensor_index = HashMap::with_capacity(tensors.len());
    for (i, t) in tensors.iter().enumerate() {
        if tensor_index.insert(t.id.clone(), i).is_some() {
            return Err(GraphError::DuplicateId(t.id.clone()));
        }
        if op_index.contains_key(&t.id) {
            return Err(GraphError::DuplicateId(t.id.clone()));
        }
    }

    // Recompute linkage from the op lists.
    for t in &mut tensors {
        t.producer = None;
        t.consumers.clear();
    }
    for op in &ops {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let lists: [(&[String], &'static str); 3] = [
            (&op.weight_ids, "weights"),
            (&op.input_ids, "inputs"),
            (&op.output_ids, "outputs"),
        ];
        for (ids, list) in lists {
            for tid in ids {
                let &ti = tensor_index.get(tid).ok_or_else(|| GraphError::DanglingReference {
                    referrer: op.id.clone(),
                    missing: tid.clone(),
                })?;
                if !seen.insert(tid) {
                    return Err(GraphError::DuplicateReference {
                        op: op.id.clone(),
                        tensor: tid.clone(),
                    });
                }
                let t = &mut tensors[ti];
                let kind_ok = match list {
                    "weights" => t.kind == TensorKind::Weight,
                    "inputs" => {
                        matches!(t.kind, TensorKind::Intermediate | TensorKind::ExternalInput)
                    }
                    _ => matches!(t.kind, TensorKind::Intermediate | TensorKind::ExternalOutput),
                };
                if !kind_ok {
                    return Err(GraphError::KindMismatch {
                        op: op.id.clone(),
                        tensor: tid.clone(),
                        kind: t.kind,
                        list,
                    });
                }
                if list == "outputs" {
                    if let Some(prev) = &t.producer {
                        return Err(GraphError::DuplicateProducer {
                            tensor: tid.clone(),
                            first: prev.clone(),
                            second: op.id.clone(),
                        });
                    }
                    t.producer = Some(op.id.clone());
                } else {
                    t.consumers.insert(op.id.clone());
                }
            }
        }
    }
    for t in &tensors {
        if t.kind.is_produced() && t.producer.is_none() {
            return Err(GraphError::MissingProducer { tensor: t.id.clone(), kind: t.kind });
        }
    }

    let topo = topo_sort(&ops, &tensors, &op_index, &tensor_index)?;
    Ok(Dag { ops, tensors, topo, op_index, tensor_index, seed })
}

/// Kahn's algorithm over the producer-op -> consumer-op relation.
fn topo_sort(
    ops: &[OpNode],
    tensors: &[TensorSpec],
    op_index: &HashMap<String, usize>,
    tensor_index: &HashMap<String, usize>,
) -> Result<Vec<usize>, GraphError> {
    let n = ops.len();
    let mut in_degree = vec![0u32; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (oi, op) in ops.iter().enumerate() {
        for tid in &op.output_ids {
            let t = &tensors[tensor_index[tid]];
            for cid in &t.consumers {
                let ci = op_index[cid];
                succ[oi].push(ci);
                in_degree[ci] += 1;
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(oi) = queue.pop_front() {
        order.push(oi);
        for &ci in &succ[oi] {
            in_degree[ci] -= 1;
            if in_degree[ci] == 0 {
                queue.push_back(ci);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n)
            .find(|&i| in_degree[i] > 0)
            .expect("some op must have positive in-degree");
        return Err(GraphError::CycleDetected(ops[stuck].id.clone()));
    }
    Ok(order)
}

// ── Synthetic workload generation ────────────────────────────────────

/// Structure of a generated workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticShape {
    /// Linear pipeline.
    Chain,
    /// One source feeding parallel branches feeding a join.
    Fanout,
    /// Chain with skip connections two stages back.
    Residual,
}

impl std::str::FromStr for SyntheticShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(Self::Chain),
            "fanout" => Ok(Self::Fanout),
            "residual" => Ok(Self::Residual),
            other => Err(format!("unknown shape {other:?}, expected chain|fanout|residual")),
        }
    }
}

/// Distributions the generator draws sizes and work from. All ranges are
/// inclusive `(min, max)` and sampled uniformly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeProfile {
    pub weight_bytes: (u64, u64),
    pub intermediate_bytes: (u64, u64),
    pub external_bytes: (u64, u64),
    pub flops: (u64, u64),
    pub random_accesses: (u64, u64),
    /// Pin external inputs/outputs to host-local memory (requests arrive in
    /// and results return to host DRAM).
    pub pin_external: bool,
}

impl Default for SizeProfile {
    fn default() -> Self {
        // Compute times land on either side of the memory times so generated
        // workloads mix bandwidth-bound and compute-bound ops.
        Self {
            weight_bytes: (4 << 20, 64 << 20),
            intermediate_bytes: (1 << 20, 32 << 20),
            external_bytes: (1 << 20, 4 << 20),
            flops: (100_000, 50_000_000),
            random_accesses: (0, 0),
            pin_external: true,
        }
    }
}

impl SizeProfile {
    /// Large tensors and negligible compute: every op is bandwidth-bound.
    pub fn memory_bound() -> Self {
        Self {
            weight_bytes: (64 << 20, 256 << 20),
            intermediate_bytes: (32 << 20, 128 << 20),
            external_bytes: (1 << 20, 2 << 20),
            flops: (1_000, 1_000_000),
            random_accesses: (0, 0),
            pin_external: true,
        }
    }

    #[must_use]
    pub fn with_pin_external(mut self, pin: bool) -> Self {
        self.pin_external = pin;
        self
    }

    fn validate(&self) -> Result<(), GraphError> {
        for (name, (lo, hi)) in [
            ("weight_bytes", self.weight_bytes),
            ("intermediate_bytes", self.intermediate_bytes),
            ("external_bytes", self.external_bytes),
            ("flops", self.flops),
            ("random_accesses", self.random_accesses),
        ] {
            if lo > hi {
                return Err(GraphError::InvalidShapeParams(format!(
                    "{name} range ({lo}, {hi}) has min > max"
                )));
            }
        }
        Ok(())
    }
}

struct SynthBuilder<'p> {
    rng: ChaCha8Rng,
    profile: &'p SizeProfile,
    ops: Vec<OpNode>,
    tensors: Vec<TensorSpec>,
}

impl<'p> SynthBuilder<'p> {
    fn new(seed: u64, profile: &'p SizeProfile) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            profile,
            ops: Vec::new(),
            tensors: Vec::new(),
        }
    }

    fn draw(&mut self, (lo, hi): (u64, u64)) -> u64 {
        self.rng.gen_range(lo..=hi)
    }

    fn external(&mut self, id: &str, kind: TensorKind) -> String {
        let size = self.draw(self.profile.external_bytes);
        let mut t = TensorSpec::new(id, kind, size);
        if self.profile.pin_external {
            t = t.pinned_to(Placement::Local);
        }
        self.tensors.push(t);
        id.to_string()
    }

    fn intermediate(&mut self, id: &str) -> String {
        let size = self.draw(self.profile.intermediate_bytes);
        self.tensors.push(TensorSpec::new(id, TensorKind::Intermediate, size));
        id.to_string()
    }

    /// Adds op `op{idx}` with a fresh weight tensor, consuming `inputs` and
    /// producing `output`.
    fn op(&mut self, idx: usize, label: &str, inputs: &[String], output: &str) {
        let wid = format!("w{idx}");
        let wsize = self.draw(self.profile.weight_bytes);
        self.tensors.push(TensorSpec::new(&wid, TensorKind::Weight, wsize));
        let flops = self.draw(self.profile.flops);
        let random = self.draw(self.profile.random_accesses);
        self.ops.push(OpNode {
            id: format!("op{idx}"),
            label: label.to_string(),
            flops,
            random_accesses: random,
            weight_ids: vec![wid],
            input_ids: inputs.to_vec(),
            output_ids: vec![output.to_string()],
        });
    }
}

/// Generate a deterministic synthetic workload.
///
/// Identical `(shape, n_ops, seed, profile)` arguments always produce an
/// identical `Dag`, including its serialized form.
pub fn gen_synthetic(
    shape: SyntheticShape,
    n_ops: usize,
    seed: u64,
    profile: &SizeProfile,
) -> Result<Dag, GraphError> {
    profile.validate()?;
    if n_ops < 1 {
        return Err(GraphError::InvalidShapeParams("n_ops must be >= 1".into()));
    }
    let mut b = SynthBuilder::new(seed, profile);
    match shape {
        SyntheticShape::Chain => {
            let mut prev = b.external("x_in", TensorKind::ExternalInput);
            for i in 0..n_ops {
                let out = if i + 1 == n_ops {
                    b.external("x_out", TensorKind::ExternalOutput)
                } else {
                    b.intermediate(&format!("t{i}"))
                };
                b.op(i, "stage", &[prev], &out);
                prev = out;
            }
        }
        SyntheticShape::Fanout => {
            if n_ops < 3 {
                return Err(GraphError::InvalidShapeParams(format!(
                    "fanout needs at least 3 ops (source, branch, join), got {n_ops}"
                )));
            }
            let x_in = b.external("x_in", TensorKind::ExternalInput);
            let t0 = b.intermediate("t0");
            b.op(0, "source", &[x_in], &t0);
            let branches = n_ops - 2;
            let mut branch_outs = Vec::with_capacity(branches);
            for i in 0..branches {
                let out = b.intermediate(&format!("t{}", i + 1));
                b.op(i + 1, "branch", std::slice::from_ref(&t0), &out);
                branch_outs.push(out);
            }
            let x_out = b.external("x_out", TensorKind::ExternalOutput);
            b.op(n_ops - 1, "join", &branch_outs, &x_out);
        }
        SyntheticShape::Residual => {
            let x_in = b.external("x_in", TensorKind::ExternalInput);
            let mut outs: Vec<String> = Vec::with_capacity(n_ops);
            for i in 0..n_ops {
                let out = if i + 1 == n_ops {
                    b.external("x_out", TensorKind::ExternalOutput)
                } else {
                    b.intermediate(&format!("t{i}"))
                };
                let mut inputs = vec![if i == 0 { x_in.clone() } else { outs[i - 1].clone() }];
                if i >= 2 {
                    inputs.push(outs[i - 2].clone());
                }
                b.op(i, "stage", &inputs, &out);
                outs.push(out);
            }
        }
    }
    build_dag_seeded(b.ops, b.tensors, Some(seed))
}

// ── File format ──────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct DagMeta {
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DagFile {
    meta: DagMeta,
    ops: Vec<OpNode>,
    tensors: Vec<TensorSpec>,
}

impl Dag {
    /// Serialize to the JSON document format (`meta`, `ops`, `tensors`).
    pub fn to_json_string(&self) -> String {
        let file = DagFile {
            meta: DagMeta { seed: self.seed },
            ops: self.ops.clone(),
            tensors: self.tensors.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("dag serializes");
        s.push('\n');
        s
    }

    /// Parse and validate the JSON document format.
    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let file: DagFile = serde_json::from_str(s).map_err(|e| GraphError::Parse(e.to_string()))?;
        build_dag_seeded(file.ops, file.tensors, file.meta.seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_json_string()).map_err(|e| GraphError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let s = std::fs::read_to_string(&path).map_err(|e| {
            GraphError::Io(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_json_str(&s)
    }
}
