//! Availability, reliability and workload completion time of a
//! primary/backup container host pair subject to software aging, with
//! migration-based rejuvenation.

pub mod analysis;
pub mod distributions;
pub mod model;
pub mod numerics;
pub mod simulator;

pub use distributions::{Density, Distribution, DistributionError};
pub use model::{Branch, HostLaws, ModelError, ModelParams, SystemState, STATES};
