pub mod actuation;
pub mod bench;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod metrics;
pub mod planner;
pub mod scheduler;
pub mod workspace;

pub use error::{Error, Result};
