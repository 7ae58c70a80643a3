//! Std companion to `cdedit-core`: state files, the scenario runner, the
//! benchmark harness and plotting. The `cdedit` binary is built on top.

pub use cdedit_core as core;

pub mod bench;
pub mod cli;
pub mod plot;
pub mod scenario;
pub mod shared;
pub mod store;
