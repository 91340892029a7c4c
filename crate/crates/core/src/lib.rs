//! Planning toolkit for hosts with a far memory tier that carries its own
//! general-purpose cores.
//!
//! The library models an inference-style workload as a DAG of operations and
//! tensors ([`graph`]), prices every (compute location, data placement)
//! configuration of each operation through a performance lookup table
//! ([`platform`]), picks a placement plan with a linear-time weighted-sum
//! partitioner ([`partition`]), and evaluates plans with a deterministic
//! sequential executor plus an exhaustive oracle for small instances
//! ([`sim`]). [`pareto`] sweeps the objective weight to trace the
//! latency/offload trade-off, and [`kernel`] holds the standalone-kernel
//! offload decision model.
//!
//! All latency/cost arithmetic is generic over the scalar type via
//! [`Scalar`]; byte counts stay `u64`. Concrete `f64` aliases for the main
//! types live at the crate root.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod graph;
pub mod kernel;
pub mod pareto;
pub mod partition;
pub mod platform;
mod scalar;
pub mod sim;

pub use scalar::Scalar;

/// Where a tensor lives: host-attached DRAM or the far memory tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Placement {
    Local,
    Remote,
}

impl Placement {
    pub fn flipped(self) -> Self {
        match self {
            Self::Local => Self::Remote,
            Self::Remote => Self::Local,
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Local => write!(f, "local"),
            Self::Remote => write!(f, "remote"),
        }
    }
}

impl FromStr for Placement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Self::Local),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown placement {other:?}, expected local|remote")),
        }
    }
}

/// Where an operation executes: the host cores or the far-memory-side cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComputeLoc {
    Host,
    Device,
}

impl ComputeLoc {
    pub fn flipped(self) -> Self {
        match self {
            Self::Host => Self::Device,
            Self::Device => Self::Host,
        }
    }
}

impl fmt::Display for ComputeLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Host => write!(f, "host"),
            Self::Device => write!(f, "device"),
        }
    }
}

impl FromStr for ComputeLoc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "host" => Ok(Self::Host),
            "device" => Ok(Self::Device),
            other => Err(format!("unknown compute location {other:?}, expected host|device")),
        }
    }
}

// Concrete aliases for the common double-precision instantiation.
pub type PlatformSpec64 = platform::PlatformSpec<f64>;
pub type PerfLut64 = platform::PerfLut<f64>;
pub type Objective64 = partition::Objective<f64>;
pub type SimReport64 = sim::SimReport<f64>;
pub type ParetoPoint64 = pareto::ParetoPoint<f64>;
pub type KernelProfile64 = kernel::KernelProfile<f64>;
