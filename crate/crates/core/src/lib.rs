//! Multi-service 3D pipe routing on an exploded orthogonal grid: an exact
//! branch-and-bound engine with lazily enforced clearance and elbow-spacing
//! constraints, two matheuristics, instance generation, validation and
//! reporting.

pub mod cli;
pub mod cost;
pub mod exact;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod heuristics;
pub mod instances;
pub mod report;
pub mod scenario;
pub mod shortest_path;
pub mod solution;

pub use error::{Error, Result};
