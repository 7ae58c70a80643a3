//! Core primitives for policy-controlled editing of a permissioned ledger.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! timing live in the companion `cdedit` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod audit;
pub mod bilinear;
pub mod chain;
pub mod cpabe;
pub mod encoding;
pub mod pch;
pub mod policy;
pub mod system;
pub mod token;
