//! Exact 3D primitives: points, segments, axis-aligned cuboids and the
//! distance queries every clearance check is built on.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Denominator tolerance for the clamped closest-point computation.
const DEGENERACY_EPS: f64 = 1e-12;

/// A point in scenario length units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    pub fn with_coord(mut self, axis: usize, value: f64) -> Self {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            2 => self.z = value,
            _ => panic!("axis index {axis} out of range"),
        }
        self
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Componentwise minimum.
    pub fn min(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    /// Componentwise maximum.
    pub fn max(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        (*self + *other) * 0.5
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A closed segment. `a == b` is allowed and stands for a single point
/// (the geometry of an elbow edge).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment3 {
    pub a: Point3,
    pub b: Point3,
}

impl Segment3 {
    pub const fn new(a: Point3, b: Point3) -> Self {
        Self { a, b }
    }

    pub const fn point(p: Point3) -> Self {
        Self { a: p, b: p }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    pub fn midpoint(&self) -> Point3 {
        self.a.midpoint(&self.b)
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.a + (self.b - self.a) * t
    }

    pub fn bounding_box(&self) -> Cuboid {
        Cuboid {
            lo: Point3::new(
                self.a.x.min(self.b.x),
                self.a.y.min(self.b.y),
                self.a.z.min(self.b.z),
            ),
            hi: Point3::new(
                self.a.x.max(self.b.x),
                self.a.y.max(self.b.y),
                self.a.z.max(self.b.z),
            ),
        }
    }
}

/// Axis-aligned closed box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub lo: Point3,
    pub hi: Point3,
}

impl Cuboid {
    /// Builds a cuboid, returning `None` unless `lo <= hi` componentwise
    /// with finite coordinates.
    pub fn new(lo: Point3, hi: Point3) -> Option<Self> {
        let ok = lo.is_finite()
            && hi.is_finite()
            && lo.x <= hi.x
            && lo.y <= hi.y
            && lo.z <= hi.z;
        ok.then_some(Self { lo, hi })
    }

    pub fn centered(center: Point3, half_extent: f64) -> Self {
        let h = Point3::new(half_extent, half_extent, half_extent);
        Self {
            lo: center - h,
            hi: center + h,
        }
    }

    pub fn expanded(&self, margin: f64) -> Self {
        let m = Point3::new(margin, margin, margin);
        Self {
            lo: self.lo - m,
            hi: self.hi + m,
        }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi.coord(axis) - self.lo.coord(axis)
    }

    /// Closed membership test.
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.coord(i) >= self.lo.coord(i) && p.coord(i) <= self.hi.coord(i))
    }

    /// Membership in the open interior.
    pub fn contains_strictly(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.coord(i) > self.lo.coord(i) && p.coord(i) < self.hi.coord(i))
    }

    pub fn contains_cuboid(&self, other: &Cuboid) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn contains_segment(&self, s: &Segment3) -> bool {
        self.contains(&s.a) && self.contains(&s.b)
    }

    pub fn intersects(&self, other: &Cuboid) -> bool {
        (0..3).all(|i| {
            self.lo.coord(i) <= other.hi.coord(i) && other.lo.coord(i) <= self.hi.coord(i)
        })
    }

    pub fn point_distance(&self, p: &Point3) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            let c = p.coord(i);
            let gap = if c < self.lo.coord(i) {
                self.lo.coord(i) - c
            } else if c > self.hi.coord(i) {
                c - self.hi.coord(i)
            } else {
                0.0
            };
            sq += gap * gap;
        }
        sq.sqrt()
    }

    /// Parameter interval `[t0, t1]` of `s` lying inside the closed box
    /// (Liang-Barsky clipping), or `None` when they are disjoint.
    pub fn clip_parameters(&self, s: &Segment3) -> Option<(f64, f64)> {
        self.clip_with(s, false)
    }

    /// The part of `s` inside the closed box.
    pub fn clip(&self, s: &Segment3) -> Option<Segment3> {
        self.clip_parameters(s)
            .map(|(t0, t1)| Segment3::new(s.at(t0), s.at(t1)))
    }

    /// True when `s` meets the open interior of the box.
    pub fn intersects_interior(&self, s: &Segment3) -> bool {
        self.clip_with(s, true).is_some()
    }

    fn clip_with(&self, s: &Segment3, open: bool) -> Option<(f64, f64)> {
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        let d = s.b - s.a;
        for i in 0..3 {
            let (lo, hi) = (self.lo.coord(i), self.hi.coord(i));
            let (p, dp) = (s.a.coord(i), d.coord(i));
            if dp == 0.0 {
                let outside = if open {
                    p <= lo || p >= hi
                } else {
                    p < lo || p > hi
                };
                if outside {
                    return None;
                }
                continue;
            }
            let mut ta = (lo - p) / dp;
            let mut tb = (hi - p) / dp;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if open {
                if t0 >= t1 {
                    return None;
                }
            } else if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Closest points `(p, q)` with `p` on `s1` and `q` on `s2`.
///
/// Clamped parametric minimisation of `|s1(u) - s2(v)|^2` over the unit
/// square; parallel and degenerate inputs fall back to clamped
/// projections.
pub fn closest_points(s1: &Segment3, s2: &Segment3) -> (Point3, Point3) {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (u, v);
    if a <= DEGENERACY_EPS && e <= DEGENERACY_EPS {
        return (s1.a, s2.a);
    }
    if a <= DEGENERACY_EPS {
        u = 0.0;
        v = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= DEGENERACY_EPS {
            v = 0.0;
            u = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut uu = if denom > DEGENERACY_EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut vv = (b * uu + f) / e;
            if vv < 0.0 {
                vv = 0.0;
                uu = (-c / a).clamp(0.0, 1.0);
            } else if vv > 1.0 {
                vv = 1.0;
                uu = ((b - c) / a).clamp(0.0, 1.0);
            }
            u = uu;
            v = vv;
        }
    }
    (s1.at(u), s2.at(v))
}

/// Minimum Euclidean distance between two closed segments.
pub fn segment_distance(s1: &Segment3, s2: &Segment3) -> f64 {
    let (p, q) = closest_points(s1, s2);
    p.distance(&q)
}

pub fn point_segment_distance(p: &Point3, s: &Segment3) -> f64 {
    segment_distance(&Segment3::point(*p), s)
}

pub fn cuboid_contains(c: &Cuboid, p: &Point3) -> bool {
    c.contains(p)
}

/// Minimum distance from any point of `s` to the closed cuboid `c`.
///
/// The squared point-to-box distance along the segment is a convex
/// piecewise quadratic in the segment parameter. Each piece between
/// consecutive face crossings is minimised in closed form.
pub fn cuboid_segment_distance(c: &Cuboid, s: &Segment3) -> f64 {
    let d = s.b - s.a;
    let mut breaks = vec![0.0, 1.0];
    for i in 0..3 {
        let dp = d.coord(i);
        if dp != 0.0 {
            for bound in [c.lo.coord(i), c.hi.coord(i)] {
                let t = (bound - s.a.coord(i)) / dp;
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);

    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let probe = s.at(0.5 * (t0 + t1));
        // Quadratic q(t) = A t^2 + B t + C restricted to the active faces.
        let (mut qa, mut qb) = (0.0, 0.0);
        for i in 0..3 {
            let pc = probe.coord(i);
            let target = if pc < c.lo.coord(i) {
                c.lo.coord(i)
            } else if pc > c.hi.coord(i) {
                c.hi.coord(i)
            } else {
                continue;
            };
            let off = s.a.coord(i) - target;
            let dp = d.coord(i);
            qa += dp * dp;
            qb += 2.0 * dp * off;
        }
        let mut t = if qa > 0.0 { -qb / (2.0 * qa) } else { t0 };
        t = t.clamp(t0, t1);
        for cand in [t, t0, t1] {
            best = best.min(c.point_distance(&s.at(cand)));
        }
    }
    best
}
