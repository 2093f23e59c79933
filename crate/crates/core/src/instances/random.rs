//! Seeded random benchmark instances: a cube with small cubic obstacles and
//! services running between its `y = 0` and `y = edge` faces.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Point3};
use crate::scenario::{CostModelKind, GridSettings, Scenario, Service, SCHEMA_VERSION};

/// Lattice points per axis on which terminals are drawn, so that they are
/// grid nodes for every density `16 m + 1`.
const TERMINAL_LATTICE: usize = 17;

const MAX_RESAMPLES: usize = 10_000;

/// Parameters of one random instance `(d, s, o, g)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomInstanceSpec {
    /// Grid points per axis.
    pub density: usize,
    pub services: usize,
    pub obstacles: usize,
    /// Replicate index.
    pub replicate: u64,
    pub seed: u64,
    /// Width of the obstacle-free layer along the region boundary.
    pub epsilon: f64,
    pub obstacle_edge: f64,
    pub region_edge: f64,
    pub radius: f64,
    pub safety: f64,
    pub elbow_min: f64,
}

impl Default for RandomInstanceSpec {
    fn default() -> Self {
        RandomInstanceSpec {
            density: 17,
            services: 2,
            obstacles: 0,
            replicate: 1,
            seed: 0,
            epsilon: 12.0,
            obstacle_edge: 10.0,
            region_edge: 128.0,
            radius: 4.0,
            safety: 1.0,
            elbow_min: 8.0,
        }
    }
}

impl RandomInstanceSpec {
    pub fn new(density: usize, services: usize, obstacles: usize, replicate: u64, seed: u64) -> Self {
        RandomInstanceSpec {
            density,
            services,
            obstacles,
            replicate,
            seed,
            ..Default::default()
        }
    }

    pub fn spacing(&self) -> f64 {
        self.region_edge / (self.density as f64 - 1.0)
    }

    pub fn name(&self) -> String {
        format!(
            "d{}_s{}_o{}_g{}",
            self.density, self.services, self.obstacles, self.replicate
        )
    }
}

/// Independent stream per purpose, so instances differing only in `o` (or
/// only in `s`) share their obstacles (or services) prefix.
fn stream(spec: &RandomInstanceSpec, tag: u64) -> Xoshiro256PlusPlus {
    let mix = spec
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(spec.replicate.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(tag.wrapping_mul(0x94D0_49BB_1331_11EB));
    Xoshiro256PlusPlus::seed_from_u64(mix)
}

pub fn generate_random(spec: &RandomInstanceSpec) -> Result<Scenario> {
    if spec.density < 2 {
        return Err(Error::Config(format!("density must be at least 2, got {}", spec.density)));
    }
    let edge = spec.region_edge;
    let region = Cuboid::new(Point3::new(0.0, 0.0, 0.0), Point3::new(edge, edge, edge))
        .ok_or_else(|| Error::Config("region edge must be nonnegative".into()))?;
    let half = spec.obstacle_edge / 2.0;
    let (lo, hi) = (spec.epsilon + half, edge - spec.epsilon - half);
    if lo > hi {
        return Err(Error::Config("obstacle-free layer leaves no room for obstacles".into()));
    }

    let mut rng = stream(spec, 1);
    let obstacles: Vec<Cuboid> = (0..spec.obstacles)
        .map(|_| {
            let c = Point3::new(
                rng.random_range(lo..=hi),
                rng.random_range(lo..=hi),
                rng.random_range(lo..=hi),
            );
            Cuboid::centered(c, half)
        })
        .collect();
    let blocked = |p: &Point3| obstacles.iter().any(|o| o.contains_strictly(p));

    let mut rng = stream(spec, 2);
    let step = edge / (TERMINAL_LATTICE as f64 - 1.0);
    let min_gap = 2.0 * spec.radius + spec.safety;
    let mut services: Vec<Service> = Vec::with_capacity(spec.services);
    let mut taken: Vec<Point3> = Vec::new();
    for k in 0..spec.services {
        let alpha1 = rng.random_range(1..=9) as f64;
        let mut pick = |y: f64, taken: &[Point3]| -> Result<Point3> {
            for _ in 0..MAX_RESAMPLES {
                let p = Point3::new(
                    rng.random_range(0..TERMINAL_LATTICE) as f64 * step,
                    y,
                    rng.random_range(0..TERMINAL_LATTICE) as f64 * step,
                );
                if !blocked(&p) && taken.iter().all(|q| q.distance(&p) >= min_gap) {
                    return Ok(p);
                }
            }
            Err(Error::Config(format!("could not place terminals of service {k}")))
        };
        let source = pick(0.0, &taken)?;
        taken.push(source);
        let destination = pick(edge, &taken)?;
        taken.push(destination);
        services.push(Service {
            id: k as u32,
            source,
            destination,
            radius: spec.radius,
            safety: spec.safety,
            elbow_min: spec.elbow_min,
            alpha: [alpha1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            source_axis: None,
            destination_axis: None,
        });
    }

    let scenario = Scenario {
        schema_version: SCHEMA_VERSION,
        region,
        obstacles,
        penetrable_zones: Vec::new(),
        preference_zones: Vec::new(),
        services,
        grid: GridSettings {
            spacing: spec.spacing(),
        },
        cost_model: CostModelKind::Random,
        terminal_radius: None,
        solver: None,
    };
    scenario.validate()?;
    Ok(scenario)
}
