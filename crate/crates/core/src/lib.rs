//! Compositional invariant computation for asynchronous process networks.

pub mod abstraction;
pub mod cli;
pub mod network;
pub mod procdsl;
pub mod refine;
pub mod semantics;
pub mod splitfix;
pub mod symmetry;
