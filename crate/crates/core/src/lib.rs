//! Simulator for a chain of two-level atoms inside a driven ring cavity.

pub mod acceptance;
pub mod disorder;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod modes;
pub mod ode;
pub mod optimize;
pub mod oracle;
pub mod routing;
pub mod scan;
pub mod weak_drive;

pub use error::{Error, Result};
pub use model::{AtomChain, StructureFactor, SystemParams};
