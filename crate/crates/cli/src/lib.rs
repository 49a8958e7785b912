//! Configuration and CSV commands behind the `vlcsim` binary.

pub mod commands;
pub mod config;

pub use commands::{ber_sweep, channel_info, optimize_kp_table, sinr_map, KpTable};
pub use config::{Allocation, RunConfig};
