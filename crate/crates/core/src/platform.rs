//! Parametric model of an asymmetric host + far-memory-device platform and
//! the profiling step that produces the per-op performance lookup table.
//!
//! Bandwidths are decimal GB/s (1 GB = 1e9 bytes), latencies nanoseconds,
//! compute rates FLOP/s. The built-in presets describe two emulated
//! dual-socket systems: the device side mirrors the host side, so the device
//! reaches the far tier at host-local speed and vice versa.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, OpNode};
use crate::{ComputeLoc, Placement, Scalar};

/// One value per (compute location, placement) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierMatrix<T> {
    pub host_local: T,
    pub host_remote: T,
    pub device_local: T,
    pub device_remote: T,
}

impl<T: Copy> TierMatrix<T> {
    pub fn get(&self, loc: ComputeLoc, placement: Placement) -> T {
        match (loc, placement) {
            (ComputeLoc::Host, Placement::Local) => self.host_local,
            (ComputeLoc::Host, Placement::Remote) => self.host_remote,
            (ComputeLoc::Device, Placement::Local) => self.device_local,
            (ComputeLoc::Device, Placement::Remote) => self.device_remote,
        }
    }

    /// Mirror of the host row: the device sees the far tier the way the host
    /// sees its local tier.
    pub fn mirrored(host_local: T, host_remote: T) -> Self {
        Self {
            host_local,
            host_remote,
            device_local: host_remote,
            device_remote: host_local,
        }
    }
}

/// Overheads of making data visible to the device-side cores when a kernel
/// is offloaded wholesale (see [`crate::kernel`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadOverhead<T> {
    pub alloc_s: T,
    pub copy_bw_gbps: T,
    pub reconstruct_s: T,
}

/// Bandwidth/latency matrices plus compute rates for one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec<T> {
    pub name: String,
    /// GB/s, decimal.
    pub bw: TierMatrix<T>,
    /// Nanoseconds per dependent access.
    pub access_latency: TierMatrix<T>,
    /// FLOP/s of the host cores.
    pub host_rate: T,
    /// FLOP/s of the device-side cores.
    pub device_rate: T,
    /// Seconds charged per host<->device compute transition.
    pub migration_overhead_s: T,
    pub offload_overhead: OffloadOverhead<T>,
}

/// Built-in platform presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatformName {
    PlatformA,
    PlatformB,
}

impl std::str::FromStr for PlatformName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" | "PlatformA" => Ok(Self::PlatformA),
            "B" | "b" | "PlatformB" => Ok(Self::PlatformB),
            other => Err(format!("unknown platform {other:?}, expected A|B")),
        }
    }
}

const FLOPS_PER_CYCLE: f64 = 8.0;

/// Measured characteristics of the two reference systems.
///
/// Platform A: 103/32 GB/s local/remote copy bandwidth, 70.4/127.8 ns
/// single-read latency. Platform B: 161/28 GB/s, 73.0/403.5 ns. Host cores
/// at 3 GHz, device cores at 2 GHz, 8 FLOP/cycle.
pub fn default_platform<T: Scalar>(name: PlatformName) -> PlatformSpec<T> {
    let c = |v: f64| T::from_f64(v).expect("platform constant");
    let (label, bw_l, bw_r, lat_l, lat_r) = match name {
        PlatformName::PlatformA => ("PlatformA", 103.0, 32.0, 70.4, 127.8),
        PlatformName::PlatformB => ("PlatformB", 161.0, 28.0, 73.0, 403.5),
    };
    PlatformSpec {
        name: label.to_string(),
        bw: TierMatrix::mirrored(c(bw_l), c(bw_r)),
        access_latency: TierMatrix::mirrored(c(lat_l), c(lat_r)),
        host_rate: c(3.0e9 * FLOPS_PER_CYCLE),
        device_rate: c(2.0e9 * FLOPS_PER_CYCLE),
        migration_overhead_s: c(5.0e-6),
        offload_overhead: OffloadOverhead {
            alloc_s: T::zero(),
            copy_bw_gbps: c(bw_l),
            reconstruct_s: T::zero(),
        },
    }
}

impl<T: Scalar> PlatformSpec<T> {
    pub fn compute_rate(&self, loc: ComputeLoc) -> T {
        match loc {
            ComputeLoc::Host => self.host_rate,
            ComputeLoc::Device => self.device_rate,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PlatformError>
    where
        T: Serialize,
    {
        let mut s = serde_json::to_string_pretty(self).expect("platform serializes");
        s.push('\n');
        std::fs::write(path, s).map_err(|e| PlatformError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlatformError>
    where
        T: serde::de::DeserializeOwned,
    {
        let s = std::fs::read_to_string(&path)
            .map_err(|e| PlatformError::Io(format!("{}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&s)
            .map_err(|e| PlatformError::Parse { line: 0, reason: e.to_string() })
    }
}

// ── Op configurations ────────────────────────────────────────────────

/// One cell of the lookup table key: where the op runs and where each of its
/// tensor streams lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpConfig {
    pub compute: ComputeLoc,
    pub weights: Placement,
    pub inputs: Placement,
    pub outputs: Placement,
}

impl OpConfig {
    pub const COUNT: usize = 16;

    pub fn new(
        compute: ComputeLoc,
        weights: Placement,
        inputs: Placement,
        outputs: Placement,
    ) -> Self {
        Self { compute, weights, inputs, outputs }
    }

    pub fn all_local(compute: ComputeLoc) -> Self {
        Self::new(compute, Placement::Local, Placement::Local, Placement::Local)
    }

    pub fn all_remote(compute: ComputeLoc) -> Self {
        Self::new(compute, Placement::Remote, Placement::Remote, Placement::Remote)
    }

    /// Dense index in the fixed lexicographic order
    /// (compute, weights, inputs, outputs) with Host/Local first.
    pub fn index(self) -> usize {
        let bit = |p: Placement| (p == Placement::Remote) as usize;
        ((self.compute == ComputeLoc::Device) as usize) << 3
            | bit(self.weights) << 2
            | bit(self.inputs) << 1
            | bit(self.outputs)
    }

    pub fn from_index(i: usize) -> Self {
        let pl = |b: usize| if b == 0 { Placement::Local } else { Placement::Remote };
        Self {
            compute: if i >> 3 & 1 == 0 { ComputeLoc::Host } else { ComputeLoc::Device },
            weights: pl(i >> 2 & 1),
            inputs: pl(i >> 1 & 1),
            outputs: pl(i & 1),
        }
    }

    /// All sixteen configurations in index order.
    pub fn enumerate() -> impl Iterator<Item = Self> {
        (0..Self::COUNT).map(Self::from_index)
    }

    /// Tie-break key that prefers offload: Device before Host, then Remote
    /// before Local per placement axis.
    pub fn offload_rank(self) -> u8 {
        let bit = |p: Placement| (p == Placement::Local) as u8;
        ((self.compute == ComputeLoc::Host) as u8) << 3
            | bit(self.weights) << 2
            | bit(self.inputs) << 1
            | bit(self.outputs)
    }

    #[must_use]
    pub fn with_axis(mut self, axis: StreamAxis, p: Placement) -> Self {
        match axis {
            StreamAxis::Weights => self.weights = p,
            StreamAxis::Inputs => self.inputs = p,
            StreamAxis::Outputs => self.outputs = p,
        }
        self
    }

    pub fn flipped(self) -> Self {
        Self {
            compute: self.compute.flipped(),
            weights: self.weights.flipped(),
            inputs: self.inputs.flipped(),
            outputs: self.outputs.flipped(),
        }
    }
}

/// The three tensor streams of an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamAxis {
    Weights,
    Inputs,
    Outputs,
}

/// Configurations an op can actually take in the table: ops without weights
/// have their weights axis canonicalized to Local (8 entries instead of 16).
pub fn lut_configs(op: &OpNode) -> Vec<OpConfig> {
    OpConfig::enumerate()
        .filter(|cfg| op.has_weights() || cfg.weights == Placement::Local)
        .collect()
}

// ── Errors ───────────────────────────────────────────────────────────

/// A missing or malformed lookup-table entry, keyed by op and configuration.
pub type LutKey = (String, OpConfig);

#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("unknown op {0:?}")]
    UnknownOp(String),
    #[error("lut file row {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("lookup table incomplete: {} missing, {} non-positive entries (first: {:?})",
            missing.len(), non_positive.len(), missing.first().or(non_positive.first()))]
    IncompleteLut { missing: Vec<LutKey>, non_positive: Vec<LutKey> },
    #[error("lut file io: {0}")]
    Io(String),
}

// ── Performance lookup table ─────────────────────────────────────────

/// Where a lookup table's numbers came from.
#[derive(Debug, Clone, PartialEq)]
pub enum LutProvenance<T> {
    Synthetic(PlatformSpec<T>),
    Measured(String),
}

/// Per-op latency (seconds) for every compute/placement configuration.
#[derive(Debug)]
pub struct PerfLut<T> {
    entries: BTreeMap<String, [Option<T>; OpConfig::COUNT]>,
    provenance: LutProvenance<T>,
    /// Lookup counter; lets tests verify the partitioner's probe bound.
    probes: AtomicU64,
}

impl<T: Scalar> PerfLut<T> {
    pub fn new(provenance: LutProvenance<T>) -> Self {
        Self { entries: BTreeMap::new(), provenance, probes: AtomicU64::new(0) }
    }

    pub fn provenance(&self) -> &LutProvenance<T> {
        &self.provenance
    }

    pub fn insert(&mut self, op_id: impl Into<String>, cfg: OpConfig, latency_s: T) {
        let slot = self.entries.entry(op_id.into()).or_insert([None; OpConfig::COUNT]);
        slot[cfg.index()] = Some(latency_s);
    }

    /// Latency for one (op, config) cell.
    pub fn get(&self, op_id: &str, cfg: OpConfig) -> Result<T, PlatformError> {
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.entries
            .get(op_id)
            .and_then(|slot| slot[cfg.index()])
            .ok_or_else(|| PlatformError::IncompleteLut {
                missing: vec![(op_id.to_string(), cfg)],
                non_positive: vec![],
            })
    }

    /// Number of `get` calls since construction or the last reset.
    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn reset_probe_count(&self) {
        self.probes.store(0, Ordering::Relaxed);
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|s| s.iter().flatten().count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries in deterministic (op id, config index) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, OpConfig, T)> + '_ {
        self.entries.iter().flat_map(|(op, slot)| {
            slot.iter().enumerate().filter_map(move |(i, v)| {
                v.map(|lat| (op.as_str(), OpConfig::from_index(i), lat))
            })
        })
    }

    /// Entry-wise equality, ignoring provenance and probe counters.
    pub fn entries_eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl<T: Scalar> Clone for PerfLut<T> {
    fn clone(&self) -> Self {
        Self {
            entries: self.entries.clone(),
            provenance: self.provenance.clone(),
            probes: AtomicU64::new(0),
        }
    }
}

// ── Synthetic latency estimation ─────────────────────────────────────

/// Roofline latency estimate for one op under one configuration.
///
/// `t = max(t_compute, t_memory) + t_latency` with
/// `t_compute = flops / rate(compute)`,
/// `t_memory  = sum over streams of bytes / bw(compute, stream placement)`,
/// `t_latency = random_accesses * access_latency(compute, inputs placement)`.
pub fn estimate_latency<T: Scalar>(
    op_id: &str,
    cfg: OpConfig,
    dag: &Dag,
    platform: &PlatformSpec<T>,
) -> Result<T, PlatformError> {
    let op = dag.op(op_id).ok_or_else(|| PlatformError::UnknownOp(op_id.to_string()))?;
    let gb = T::from_f64(1e9).expect("1e9");
    let ns = T::from_f64(1e-9).expect("1e-9");

    let t_compute = T::from_count(op.flops) / platform.compute_rate(cfg.compute);
    let stream = |ids: &[String], p: Placement| {
        T::from_count(dag.bytes_of(ids)) / (platform.bw.get(cfg.compute, p) * gb)
    };
    let t_memory = stream(&op.weight_ids, cfg.weights)
        + stream(&op.input_ids, cfg.inputs)
        + stream(&op.output_ids, cfg.outputs);
    let t_latency = T::from_count(op.random_accesses)
        * platform.access_latency.get(cfg.compute, cfg.inputs)
        * ns;
    Ok(t_compute.max(t_memory) + t_latency)
}

/// Profile every op of `dag` under every valid configuration.
pub fn build_lut_synthetic<T: Scalar>(dag: &Dag, platform: &PlatformSpec<T>) -> PerfLut<T> {
    let mut lut = PerfLut::new(LutProvenance::Synthetic(platform.clone()));
    for op in dag.ops() {
        for cfg in lut_configs(op) {
            let lat = estimate_latency(&op.id, cfg, dag, platform)
                .expect("op comes from this dag");
            lut.insert(&op.id, cfg, lat);
        }
    }
    lut
}

/// Per-dag completeness and sanity report for a lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct LutValidation {
    /// Required (op, config) cells absent from the table.
    pub missing: Vec<LutKey>,
    /// Cells with latency <= 0 on ops that do real work.
    pub non_positive: Vec<LutKey>,
}

impl LutValidation {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty() && self.non_positive.is_empty()
    }

    pub fn into_result(self) -> Result<(), PlatformError> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(PlatformError::IncompleteLut {
                missing: self.missing,
                non_positive: self.non_positive,
            })
        }
    }
}

/// Check that `lut` covers every (op, valid config) pair of `dag` and that
/// every op with nonzero work has strictly positive latencies.
pub fn validate_lut<T: Scalar>(lut: &PerfLut<T>, dag: &Dag) -> LutValidation {
    let mut missing = Vec::new();
    let mut non_positive = Vec::new();
    for op in dag.ops() {
        let has_work = op.flops > 0
            || op.random_accesses > 0
            || dag.bytes_of(&op.weight_ids) + dag.bytes_of(&op.input_ids) + dag.bytes_of(&op.output_ids)
                > 0;
        for cfg in lut_configs(op) {
            match lut.get(&op.id, cfg) {
                Err(_) => missing.push((op.id.clone(), cfg)),
                Ok(lat) if has_work && lat <= T::zero() => {
                    non_positive.push((op.id.clone(), cfg));
                }
                Ok(_) => {}
            }
        }
    }
    LutValidation { missing, non_positive }
}

// ── File format ──────────────────────────────────────────────────────

pub const LUT_HEADER: &str = "op_id,compute,weights,inputs,outputs,latency_seconds";

/// Render the table in its delimited on-disk form (deterministic order).
pub fn lut_to_string<T: Scalar>(lut: &PerfLut<T>) -> String {
    let mut out = String::from(LUT_HEADER);
    out.push('\n');
    for (op, cfg, lat) in lut.iter() {
        out.push_str(&format!(
            "{op},{},{},{},{},{lat}\n",
            cfg.compute, cfg.weights, cfg.inputs, cfg.outputs
        ));
    }
    out
}

pub fn save_lut<T: Scalar>(lut: &PerfLut<T>, path: impl AsRef<Path>) -> Result<(), PlatformError> {
    std::fs::write(path, lut_to_string(lut)).map_err(|e| PlatformError::Io(e.to_string()))
}

/// Parse the delimited format. Rejects malformed rows and negative or
/// non-finite latencies, with the 1-based row number in the error.
pub fn lut_from_str<T: Scalar>(s: &str, source: &str) -> Result<PerfLut<T>, PlatformError> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == LUT_HEADER => {}
        Some((_, header)) => {
            return Err(PlatformError::Parse {
                line: 1,
                reason: format!("bad header {header:?}, expected {LUT_HEADER:?}"),
            })
        }
        None => return Err(PlatformError::Parse { line: 1, reason: "empty file".into() }),
    }
    let mut lut = PerfLut::new(LutProvenance::Measured(source.to_string()));
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(PlatformError::Parse {
                line: row,
                reason: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let err = |reason: String| PlatformError::Parse { line: row, reason };
        let compute: ComputeLoc = fields[1].parse().map_err(err)?;
        let weights: Placement = fields[2].parse().map_err(err)?;
        let inputs: Placement = fields[3].parse().map_err(err)?;
        let outputs: Placement = fields[4].parse().map_err(err)?;
        let latency: f64 = fields[5]
            .parse()
            .map_err(|e| PlatformError::Parse { line: row, reason: format!("latency: {e}") })?;
        if !latency.is_finite() || latency < 0.0 {
            return Err(PlatformError::Parse {
                line: row,
                reason: format!("latency must be finite and >= 0, got {latency}"),
            });
        }
        let lat = T::from_f64(latency).ok_or_else(|| PlatformError::Parse {
            line: row,
            reason: "latency out of range for scalar type".into(),
        })?;
        lut.insert(fields[0], OpConfig::new(compute, weights, inputs, outputs), lat);
    }
    Ok(lut)
}

pub fn load_lut<T: Scalar>(path: impl AsRef<Path>) -> Result<PerfLut<T>, PlatformError> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path)
        .map_err(|e| PlatformError::Io(format!("{}: {e}", path.display())))?;
    lut_from_str(&s, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dag, gen_synthetic, OpNode, SizeProfile, SyntheticShape, TensorKind, TensorSpec};

    fn one_op_dag(weight: u64, input: u64, output: u64, flops: u64, random: u64) -> Dag {
        let ops = vec![OpNode::new("op0", "k")
            .with_flops(flops)
            .with_random_accesses(random)
            .with_weights(&["w"])
            .with_inputs(&["x"])
            .with_outputs(&["y"])];
        let tensors = vec![
            TensorSpec::new("w", TensorKind::Weight, weight),
            TensorSpec::new("x", TensorKind::ExternalInput, input),
            TensorSpec::new("y", TensorKind::ExternalOutput, output),
        ];
        build_dag(ops, tensors).unwrap()
    }

    #[test]
    fn platform_b_table_values() {
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        assert_eq!(p.bw.get(ComputeLoc::Host, Placement::Remote), 28.0);
        assert_eq!(p.access_latency.get(ComputeLoc::Host, Placement::Remote), 403.5);
        assert_eq!(p.bw.get(ComputeLoc::Host, Placement::Local), 161.0);
        assert_eq!(p.access_latency.get(ComputeLoc::Host, Placement::Local), 73.0);
        // Mirrored device side.
        assert_eq!(p.bw.get(ComputeLoc::Device, Placement::Remote), 161.0);
        assert_eq!(p.bw.get(ComputeLoc::Device, Placement::Local), 28.0);
        assert_eq!(p.access_latency.get(ComputeLoc::Device, Placement::Remote), 73.0);
        // 3 GHz vs 2 GHz.
        assert_eq!(p.device_rate / p.host_rate, 2.0 / 3.0);
    }

    #[test]
    fn platform_a_table_values() {
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformA);
        assert_eq!(p.bw.get(ComputeLoc::Host, Placement::Local), 103.0);
        assert_eq!(p.access_latency.get(ComputeLoc::Host, Placement::Local), 70.4);
        assert_eq!(p.bw.get(ComputeLoc::Host, Placement::Remote), 32.0);
        assert_eq!(p.access_latency.get(ComputeLoc::Host, Placement::Remote), 127.8);
    }

    #[test]
    fn zero_work_op_estimates_zero() {
        let dag = one_op_dag(0, 0, 0, 0, 0);
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let t = estimate_latency("op0", OpConfig::all_local(ComputeLoc::Host), &dag, &p).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn remote_input_stream_on_host_costs_full_bandwidth() {
        // 28 GB over the 28 GB/s far link dominates: exactly 1 second.
        let dag = one_op_dag(0, 28_000_000_000, 0, 1, 0);
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let host = OpConfig::new(ComputeLoc::Host, Placement::Local, Placement::Remote, Placement::Local);
        let t = estimate_latency("op0", host, &dag, &p).unwrap();
        assert!((t - 1.0).abs() < 1e-12, "got {t}");

        // Moving compute next to the data recovers the memory time even
        // though the device cores are slower.
        let dev = OpConfig::new(ComputeLoc::Device, Placement::Local, Placement::Remote, Placement::Local);
        let t = estimate_latency("op0", dev, &dag, &p).unwrap();
        assert!((t - 28.0 / 161.0).abs() < 1e-12, "got {t}");
    }

    #[test]
    fn unknown_op_rejected() {
        let dag = one_op_dag(1, 1, 1, 1, 0);
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        assert_eq!(
            estimate_latency("nope", OpConfig::all_local(ComputeLoc::Host), &dag, &p),
            Err(PlatformError::UnknownOp("nope".into()))
        );
    }

    #[test]
    fn random_accesses_use_inputs_placement() {
        let dag = one_op_dag(0, 0, 0, 0, 1_000_000);
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let remote_in =
            OpConfig::new(ComputeLoc::Host, Placement::Local, Placement::Remote, Placement::Local);
        let t = estimate_latency("op0", remote_in, &dag, &p).unwrap();
        assert!((t - 1e6 * 403.5e-9).abs() < 1e-12);
    }

    #[test]
    fn lut_entry_counts() {
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let with_weights = one_op_dag(8, 8, 8, 8, 0);
        assert_eq!(build_lut_synthetic(&with_weights, &p).len(), 16);

        let ops = vec![OpNode::new("op0", "k").with_inputs(&["x"]).with_outputs(&["y"])];
        let tensors = vec![
            TensorSpec::new("x", TensorKind::ExternalInput, 8),
            TensorSpec::new("y", TensorKind::ExternalOutput, 8),
        ];
        let no_weights = build_dag(ops, tensors).unwrap();
        assert_eq!(build_lut_synthetic(&no_weights, &p).len(), 8);

        let chain = gen_synthetic(SyntheticShape::Chain, 3, 5, &SizeProfile::default()).unwrap();
        let lut = build_lut_synthetic(&chain, &p);
        assert_eq!(lut.len(), 48);
        for (_, _, lat) in lut.iter() {
            assert!(lat > 0.0);
        }
        assert!(validate_lut(&lut, &chain).is_ok());
    }

    #[test]
    fn lut_round_trip() {
        let dag = gen_synthetic(SyntheticShape::Fanout, 4, 9, &SizeProfile::default()).unwrap();
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformA);
        let lut = build_lut_synthetic(&dag, &p);
        let s = lut_to_string(&lut);
        let back: PerfLut<f64> = lut_from_str(&s, "mem").unwrap();
        assert!(lut.entries_eq(&back));
        assert_eq!(s, lut_to_string(&back));
    }

    #[test]
    fn missing_entry_named_exactly() {
        let dag = gen_synthetic(SyntheticShape::Chain, 3, 5, &SizeProfile::default()).unwrap();
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let full = build_lut_synthetic(&dag, &p);
        let gone = OpConfig::all_remote(ComputeLoc::Device);
        let mut partial: PerfLut<f64> = PerfLut::new(LutProvenance::Measured("test".into()));
        for (op, cfg, lat) in full.iter() {
            if !(op == "op2" && cfg == gone) {
                partial.insert(op, cfg, lat);
            }
        }
        let v = validate_lut(&partial, &dag);
        assert_eq!(v.missing, vec![("op2".to_string(), gone)]);
        assert!(v.non_positive.is_empty());
        assert!(v.into_result().is_err());
    }

    #[test]
    fn negative_latency_row_rejected() {
        let s = format!("{LUT_HEADER}\nop0,host,local,local,local,-1.0\n");
        match lut_from_str::<f64>(&s, "test") {
            Err(PlatformError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_rejected() {
        let s = format!("{LUT_HEADER}\nop0,host,local,local\n");
        match lut_from_str::<f64>(&s, "test") {
            Err(PlatformError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn config_index_round_trip() {
        for cfg in OpConfig::enumerate() {
            assert_eq!(OpConfig::from_index(cfg.index()), cfg);
        }
        // Offload rank prefers Device and Remote.
        assert!(
            OpConfig::all_remote(ComputeLoc::Device).offload_rank()
                < OpConfig::all_local(ComputeLoc::Host).offload_rank()
        );
    }

    #[test]
    fn mirrored_platform_symmetry_with_equal_rates() {
        let dag = one_op_dag(1 << 24, 1 << 22, 1 << 21, 1 << 20, 1000);
        let mut p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        p.device_rate = p.host_rate;
        for cfg in OpConfig::enumerate() {
            let a = estimate_latency("op0", cfg, &dag, &p).unwrap();
            let b = estimate_latency("op0", cfg.flipped(), &dag, &p).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{cfg:?}: {a} vs {b}");
        }
    }

    #[test]
    fn estimate_is_monotone_in_work() {
        let p: PlatformSpec<f64> = default_platform(PlatformName::PlatformB);
        let cfg = OpConfig::new(ComputeLoc::Host, Placement::Remote, Placement::Local, Placement::Remote);
        let base = one_op_dag(1 << 20, 1 << 20, 1 << 20, 1 << 20, 10);
        let t0 = estimate_latency("op0", cfg, &base, &p).unwrap();
        for (w, i, o, f, r) in [
            (2 << 20, 1 << 20, 1 << 20, 1 << 20, 10u64),
            (1 << 20, 2 << 20, 1 << 20, 1 << 20, 10),
            (1 << 20, 1 << 20, 2 << 20, 1 << 20, 10),
            (1 << 20, 1 << 20, 1 << 20, 2 << 20, 10),
            (1 << 20, 1 << 20, 1 << 20, 1 << 20, 20),
        ] {
            let bigger = one_op_dag(w, i, o, f, r);
            let t1 = estimate_latency("op0", cfg, &bigger, &p).unwrap();
            assert!(t1 >= t0);
        }
    }
}
