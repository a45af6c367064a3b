//! Layered graph traversal on width-`k` layered trees.

pub mod binary;
pub mod instance;
pub mod rounding;
pub mod transport;
pub mod traverse;

pub use binary::binary_convert;
pub use instance::{LayerNode, LayerPos, LayeredTree};
pub use rounding::{sample_walk, sample_walks, Walk, WalkStatistics};
pub use transport::{transport_plan, LayerDistribution, TransportPlan};
pub use traverse::{traverse, LayerTrace, TraverseConfig};
