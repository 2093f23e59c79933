//! Wavefront OBJ export of routes, obstacles and zones.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::geometry::{Cuboid, Point3};
use crate::scenario::Scenario;
use crate::solution::Solution;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjOptions {
    /// Sides of the tube mesh around each route; `None` writes polylines only.
    pub tube_sides: Option<usize>,
}

impl Default for ObjOptions {
    fn default() -> Self {
        ObjOptions { tube_sides: Some(12) }
    }
}

struct ObjWriter<W: Write> {
    out: W,
    vertices: usize,
}

impl<W: Write> ObjWriter<W> {
    fn object(&mut self, name: &str) -> std::io::Result<()> {
        writeln!(self.out, "o {name}")
    }

    /// Writes vertices and returns the 1-based index of the first.
    fn vertices(&mut self, pts: &[Point3]) -> std::io::Result<usize> {
        for p in pts {
            writeln!(self.out, "v {} {} {}", p.x, p.y, p.z)?;
        }
        let first = self.vertices + 1;
        self.vertices += pts.len();
        Ok(first)
    }

    fn cuboid(&mut self, name: &str, c: &Cuboid) -> std::io::Result<()> {
        self.object(name)?;
        let corner = |i: usize| {
            Point3::new(
                if i & 1 == 0 { c.lo.x } else { c.hi.x },
                if i & 2 == 0 { c.lo.y } else { c.hi.y },
                if i & 4 == 0 { c.lo.z } else { c.hi.z },
            )
        };
        let pts: Vec<Point3> = (0..8).map(corner).collect();
        let v = self.vertices(&pts)?;
        for f in [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]] {
            writeln!(self.out, "f {} {} {} {}", v + f[0], v + f[1], v + f[2], v + f[3])?;
        }
        Ok(())
    }

    /// Open cylinder of `radius` around each polyline segment.
    fn tube(&mut self, polyline: &[Point3], radius: f64, sides: usize) -> std::io::Result<()> {
        for w in polyline.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dir = b - a;
            let len = dir.norm();
            if len == 0.0 {
                continue;
            }
            let axis = dir * (1.0 / len);
            let helper = if axis.x.abs() < 0.9 {
                Point3::new(1.0, 0.0, 0.0)
            } else {
                Point3::new(0.0, 1.0, 0.0)
            };
            let u = cross(&axis, &helper);
            let u = u * (1.0 / u.norm());
            let v = cross(&axis, &u);
            let mut ring = Vec::with_capacity(2 * sides);
            for end in [a, b] {
                for i in 0..sides {
                    let t = std::f64::consts::TAU * i as f64 / sides as f64;
                    ring.push(end + u * (radius * t.cos()) + v * (radius * t.sin()));
                }
            }
            let first = self.vertices(&ring)?;
            for i in 0..sides {
                let j = (i + 1) % sides;
                let (p, q, r, s) = (first + i, first + j, first + sides + j, first + sides + i);
                writeln!(self.out, "f {p} {q} {r}")?;
                writeln!(self.out, "f {p} {r} {s}")?;
            }
        }
        Ok(())
    }
}

fn cross(a: &Point3, b: &Point3) -> Point3 {
    Point3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

/// Writes one object per routed service (its polyline as a line element,
/// plus the tube mesh if requested), then one box object per obstacle and
/// zone.
pub fn write_obj(scenario: &Scenario, solution: &Solution, options: &ObjOptions, out: impl Write) -> Result<()> {
    let mut w = ObjWriter { out, vertices: 0 };
    for route in &solution.routes {
        if route.polyline.is_empty() {
            continue;
        }
        w.object(&format!("service_{}", route.service))?;
        let first = w.vertices(&route.polyline)?;
        let idx: Vec<String> = (first..first + route.polyline.len()).map(|i| i.to_string()).collect();
        writeln!(w.out, "l {}", idx.join(" "))?;
        let radius = scenario
            .service_index(route.service)
            .map(|k| scenario.services[k].radius);
        if let (Some(sides), Some(r)) = (options.tube_sides, radius) {
            w.tube(&route.polyline, r, sides.max(3))?;
        }
    }
    for (i, c) in scenario.obstacles.iter().enumerate() {
        w.cuboid(&format!("obstacle_{i}"), c)?;
    }
    for (i, c) in scenario.penetrable_zones.iter().enumerate() {
        w.cuboid(&format!("penetrable_zone_{i}"), c)?;
    }
    for (i, c) in scenario.preference_zones.iter().enumerate() {
        w.cuboid(&format!("preference_zone_{i}"), c)?;
    }
    w.out.flush()?;
    Ok(())
}

pub fn export_geometry(scenario: &Scenario, solution: &Solution, options: &ObjOptions, path: &Path) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_obj(scenario, solution, options, f)
}
