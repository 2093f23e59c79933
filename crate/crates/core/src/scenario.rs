//! The continuous routing problem: a cabin region, obstacles, zones and the
//! services (pipelines) to route through it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Point3};
use crate::exact::ExactConfig;
use crate::heuristics::{H1Settings, H2Settings};

pub const SCHEMA_VERSION: u32 = 1;

/// Coordinate axis; also tags grid edges and virtual nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModelKind {
    /// Seven-criterion additive designer cost.
    CaseStudy,
    /// `alpha1 * (d + 10 El + 2 Ch)`.
    Random,
}

/// One pipeline to route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: u32,
    pub source: Point3,
    pub destination: Point3,
    /// Pipe radius `R^k`.
    pub radius: f64,
    /// Safety margin `Delta^k`.
    pub safety: f64,
    /// Minimum spacing between consecutive elbows `D^k`.
    pub elbow_min: f64,
    /// Cost weights alpha_1..alpha_7.
    pub alpha: [f64; 7],
    /// Axis on which the pipe leaves its source. Defaults to the normal of
    /// the nearest region face.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination_axis: Option<Axis>,
}

impl Service {
    /// `R^k + Delta^k`: clearance to obstacles and covering radius.
    pub fn clearance(&self) -> f64 {
        self.radius + self.safety
    }
}

/// Minimum distance allowed between two services:
/// `R^k + R^k' + max(Delta^k, Delta^k')`.
pub fn pair_clearance(a: &Service, b: &Service) -> f64 {
    a.radius + b.radius + a.safety.max(b.safety)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub spacing: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<H1Settings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<H2Settings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub region: Cuboid,
    #[serde(default)]
    pub obstacles: Vec<Cuboid>,
    #[serde(default)]
    pub penetrable_zones: Vec<Cuboid>,
    #[serde(default)]
    pub preference_zones: Vec<Cuboid>,
    pub services: Vec<Service>,
    pub grid: GridSettings,
    pub cost_model: CostModelKind,
    /// Radius within which an elbow counts as close to a terminal. Defaults
    /// to twice the grid spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings>,
}

pub fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

impl Scenario {
    /// Maximum height `MH` of the cabin.
    pub fn ceiling(&self) -> f64 {
        self.region.hi.z
    }

    pub fn terminal_radius(&self) -> f64 {
        self.terminal_radius.unwrap_or(2.0 * self.grid.spacing)
    }

    /// True if `p` is blocked: strictly inside an obstacle and not inside
    /// any penetrable zone.
    pub fn is_blocked(&self, p: &Point3) -> bool {
        self.obstacles.iter().any(|o| o.contains_strictly(p))
            && !self.penetrable_zones.iter().any(|z| z.contains(p))
    }

    pub fn service_index(&self, id: u32) -> Option<usize> {
        self.services.iter().position(|s| s.id == id)
    }

    /// Axis of the region face closest to `p` (ties resolved X, Y, Z).
    pub fn nearest_face_axis(&self, p: &Point3) -> Axis {
        let mut best = (f64::INFINITY, Axis::X);
        for axis in Axis::ALL {
            let i = axis.index();
            let d = (p.coord(i) - self.region.lo.coord(i))
                .abs()
                .min((self.region.hi.coord(i) - p.coord(i)).abs());
            if d < best.0 {
                best = (d, axis);
            }
        }
        best.1
    }

    pub fn source_axis(&self, k: usize) -> Axis {
        let s = &self.services[k];
        s.source_axis.unwrap_or_else(|| self.nearest_face_axis(&s.source))
    }

    pub fn destination_axis(&self, k: usize) -> Axis {
        let s = &self.services[k];
        s.destination_axis
            .unwrap_or_else(|| self.nearest_face_axis(&s.destination))
    }

    /// Checks the structural invariants of the scenario.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if Cuboid::new(self.region.lo, self.region.hi).is_none() {
            return bad("region corners must be finite with lo <= hi".into());
        }
        if !(self.grid.spacing.is_finite() && self.grid.spacing > 0.0) {
            return bad(format!("grid spacing must be positive, got {}", self.grid.spacing));
        }
        let groups = [
            ("obstacles", &self.obstacles),
            ("penetrable_zones", &self.penetrable_zones),
            ("preference_zones", &self.preference_zones),
        ];
        for (name, boxes) in groups {
            for (i, c) in boxes.iter().enumerate() {
                if Cuboid::new(c.lo, c.hi).is_none() {
                    return bad(format!("{name}[{i}] has inverted or non-finite corners"));
                }
                if !self.region.contains_cuboid(c) {
                    return bad(format!("{name}[{i}] is not contained in the region"));
                }
            }
        }
        if let Some(r) = self.terminal_radius {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("terminal_radius must be nonnegative, got {r}"));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for (k, s) in self.services.iter().enumerate() {
            if !ids.insert(s.id) {
                return bad(format!("duplicate service id {}", s.id));
            }
            if !(s.radius.is_finite() && s.radius > 0.0) {
                return bad(format!("services[{k}].radius must be positive"));
            }
            if !(s.safety.is_finite() && s.safety >= 0.0) {
                return bad(format!("services[{k}].safety must be nonnegative"));
            }
            if !(s.elbow_min.is_finite() && s.elbow_min >= 0.0) {
                return bad(format!("services[{k}].elbow_min must be nonnegative"));
            }
            if s.alpha.iter().any(|a| !a.is_finite()) {
                return bad(format!("services[{k}].alpha must be finite"));
            }
            match self.cost_model {
                CostModelKind::CaseStudy => {
                    if s.alpha[0] + s.alpha[4] <= 0.0 {
                        return bad(format!("services[{k}]: alpha1 + alpha5 must be positive"));
                    }
                    if [1, 2, 3, 5, 6].iter().any(|&i| s.alpha[i] < 0.0) {
                        return bad(format!(
                            "services[{k}]: alpha2, alpha3, alpha4, alpha6, alpha7 must be nonnegative"
                        ));
                    }
                    if s.alpha[0] < 0.0 {
                        return bad(format!("services[{k}]: alpha1 must be nonnegative"));
                    }
                }
                CostModelKind::Random => {
                    if s.alpha[0] <= 0.0 {
                        return bad(format!("services[{k}]: alpha1 must be positive"));
                    }
                }
            }
            for (what, p) in [("source", &s.source), ("destination", &s.destination)] {
                if !p.is_finite() || !self.region.contains(p) {
                    return bad(format!("services[{k}].{what} lies outside the region"));
                }
                if self.is_blocked(p) {
                    return bad(format!("services[{k}].{what} lies inside an obstacle"));
                }
            }
            if s.source == s.destination {
                return bad(format!("services[{k}] has identical source and destination"));
            }
        }
        Ok(())
    }
}
