//! Secure heterogeneous UAV network simulator and hierarchical optimizer.

pub mod association;
pub mod channel;
pub mod config;
pub mod env;
pub mod expert;
pub mod harness;
pub mod learner;
pub mod error;
pub mod rsma;
pub mod s2dc;
pub mod world;

pub use error::{Error, Result};
