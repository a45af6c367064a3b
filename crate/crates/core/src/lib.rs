//! Randomized layered graph traversal by entropic mirror descent on an
//! evolving tree, with the potential-function analysis checked at runtime.

pub mod dynamics;
pub mod error;
mod frame;
pub mod harness;
pub mod layered;
pub mod potential;
pub mod state;
pub mod tree;

pub use error::{Error, Result};
pub use state::FractionalState;
pub use tree::{EvolvingTree, NodeId};
