//! Shared lateral control of a vehicle: driver-in-the-loop model, T-S
//! saturated state-feedback synthesis and closed-loop simulation.

pub mod config;
pub mod error;
pub mod interaction;
pub mod sim;
pub mod synthesis;
pub mod ts;
pub mod vehicle;

pub use config::Config;
pub use error::{CoreError, Result};
