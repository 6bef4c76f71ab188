//! Composable MPC primitives for highway driving, with a feasibility-aware
//! task switcher and a closed-loop evaluation harness.

pub mod assigner;
pub mod error;
pub mod harness;
pub mod iocp;
pub mod mppi;
pub mod ocp;
pub mod planner;
pub mod primitives;
pub mod sim;
pub mod switcher;
pub mod trace;

pub use error::{Error, Result};
