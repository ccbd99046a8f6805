pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod planner;
pub mod powerctl;
pub mod simulation;

pub use error::{Error, Result};
