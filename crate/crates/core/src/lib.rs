//! Domain partitioning for hierarchical satellite SDN control planes.
//!
//! LEO satellites act as switches; MEO satellites and ground stations act as
//! controllers that can only manage LEOs inside their field of view. The crate
//! covers orbit geometry, FOV domains and time slots, synthetic traffic, the
//! analytic control-overhead model, the three-step partitioner with its
//! baselines, and a deterministic control-plane emulator.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constellation;
pub mod corg;
pub mod emulator;
pub mod error;
pub mod overhead;
pub mod partition;
pub mod routing;
pub mod traffic;
pub mod visibility;

pub use constellation::{Network, NetworkSnapshot, NodeId, Role, ShellSpec};
pub use error::{Error, Result};
pub use overhead::{OverheadParams, OverheadReport};
pub use partition::{DomainAssignment, Strategy};
pub use traffic::TrafficMatrix;
pub use visibility::{Coverage, Thresholds, TimeSlot};
