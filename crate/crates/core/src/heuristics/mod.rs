//! Matheuristics: tube restriction around independent optimal paths (H1)
//! and shortest-path decomposition with cost inflation (H2).

pub mod covering;
pub mod elbow_spp;
pub mod h1;
pub mod h2;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Cuboid;

pub use covering::{conflict_pairs, covering_list};
pub use elbow_spp::{spp_elbow_test, ElbowTestFailed};
pub use h1::run_h1;
pub use h2::run_h2;

/// How the initial tube half-width is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// `R^k + Delta^k` for each service.
    #[default]
    PerService,
    /// The largest `R^k + Delta^k` over all services, for every service.
    MaxOverServices,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct H1Settings {
    pub delta_mode: DeltaMode,
    /// Overrides the initial half-width for every service.
    pub delta_init: Option<f64>,
    /// Half-width increment after an infeasible restricted solve; defaults
    /// to the grid spacing.
    pub delta_step: Option<f64>,
    /// Seconds per restricted exact solve.
    pub time_limit: f64,
    /// Candidate zones per service id, always part of the allowed region.
    pub init_zones: BTreeMap<u32, Vec<Cuboid>>,
}

impl Default for H1Settings {
    fn default() -> Self {
        H1Settings {
            delta_mode: DeltaMode::PerService,
            delta_init: None,
            delta_step: None,
            time_limit: 60.0,
            init_zones: BTreeMap::new(),
        }
    }
}

/// Fractions of the iterations spent in each iteration type, in the order
/// parallel, cluster, sequential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub par: f64,
    pub cluster: f64,
    pub seq: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            par: 0.1,
            cluster: 0.8,
            seq: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct H2Settings {
    pub maxit: usize,
    pub schedule: Schedule,
    /// Conflict edges are raised to `gamma` times the largest base edge cost.
    pub gamma: f64,
    /// Multiplier for conflict edges in sequential iterations.
    pub gamma_seq: f64,
    /// Iteration cap of the elbow-spacing shortest path.
    pub elbow_test_max_iter: usize,
    /// Multiplier applied to the elbow costs of a node failing the elbow test.
    pub elbow_inflation: f64,
    /// Grid points per axis of the coarser grid tried when no conflict-free
    /// solution is found.
    pub fallback_density: Option<usize>,
}

impl Default for H2Settings {
    fn default() -> Self {
        H2Settings {
            maxit: 20,
            schedule: Schedule::default(),
            gamma: 10.0,
            gamma_seq: 1.5,
            elbow_test_max_iter: 50,
            elbow_inflation: 2.0,
            fallback_density: None,
        }
    }
}
