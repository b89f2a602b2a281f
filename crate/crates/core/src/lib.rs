//! Dual bounds for the EURO/ROADEF 2010 nuclear outage scheduling problem.

pub mod chain;
pub mod error;
pub mod formulations;
pub mod instance;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result, Violation};
pub use instance::*;
