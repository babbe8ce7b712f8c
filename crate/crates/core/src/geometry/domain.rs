use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::primitive::{distance_to, Primitive};
use crate::error::{Error, Result};

/// Tolerance for "on the boundary" decisions.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x[0] >= self.min[0] - tol && x[0] <= self.max[0] + tol && x[1] >= self.min[1] - tol && x[1] <= self.max[1] + tol
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }

    /// Edges in counter-clockwise order: bottom, right, top, left.
    pub fn edges(&self) -> Vec<Primitive> {
        polygon_edges(&self.corners())
    }
}

pub fn polygon_edges(vertices: &[[f64; 2]]) -> Vec<Primitive> {
    (0..vertices.len())
        .map(|i| Primitive::Segment {
            a: vertices[i],
            b: vertices[(i + 1) % vertices.len()],
        })
        .collect()
}

/// Signed area (positive for counter-clockwise vertex order).
pub fn polygon_signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Closed point-in-polygon test (boundary counts as inside).
pub fn polygon_contains(vertices: &[[f64; 2]], x: &[f64], tol: f64) -> bool {
    if distance_to(&polygon_edges(vertices), x) <= tol {
        return true;
    }
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let cross = (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0];
            if x[0] < cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Rect(Rect),
    RectUnion {
        rects: Vec<Rect>,
    },
    /// Outer rectangle with a polygonal hole strictly inside it.
    RectMinusPolygon {
        outer: Rect,
        hole: Vec<[f64; 2]>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Cube {
        min: [f64; 3],
        max: [f64; 3],
    },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Cube { .. } => 3,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Geometry(msg.into()));
        match self {
            Domain::Rect(r) => {
                if r.area() <= 0.0 {
                    return bad("rectangle has empty interior");
                }
            }
            Domain::RectUnion { rects } => {
                if rects.is_empty() || rects.iter().any(|r| r.area() <= 0.0) {
                    return bad("rectangle union needs non-empty rectangles");
                }
            }
            Domain::RectMinusPolygon { outer, hole } => {
                if outer.area() <= 0.0 || hole.len() < 3 {
                    return bad("malformed rectangle-minus-polygon");
                }
                let strictly_inside = hole
                    .iter()
                    .all(|v| v[0] > outer.min[0] && v[0] < outer.max[0] && v[1] > outer.min[1] && v[1] < outer.max[1]);
                if !strictly_inside {
                    return bad("hole polygon must lie strictly inside the outer rectangle");
                }
                if polygon_signed_area(hole).abs() >= outer.area() {
                    return bad("hole covers the domain");
                }
            }
            Domain::Polygon { vertices } => {
                if vertices.len() < 3 || polygon_signed_area(vertices).abs() == 0.0 {
                    return bad("polygon has empty interior");
                }
            }
            Domain::Cube { min, max } => {
                if (0..3).any(|i| max[i] <= min[i]) {
                    return bad("box has empty interior");
                }
            }
        }
        Ok(())
    }

    /// Closed membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Rect(r) => r.contains(x, GEOM_TOL),
            Domain::RectUnion { rects } => rects.iter().any(|r| r.contains(x, GEOM_TOL)),
            Domain::RectMinusPolygon { outer, hole } => {
                outer.contains(x, GEOM_TOL)
                    && (!polygon_contains(hole, x, 0.0) || distance_to(&polygon_edges(hole), x) <= GEOM_TOL)
            }
            Domain::Polygon { vertices } => polygon_contains(vertices, x, GEOM_TOL),
            Domain::Cube { min, max } => (0..3).all(|i| x[i] >= min[i] - GEOM_TOL && x[i] <= max[i] + GEOM_TOL),
        }
    }

    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        self.contains(x) && distance_to(&self.boundary(), x) > GEOM_TOL
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Rect(r) | Domain::RectMinusPolygon { outer: r, .. } => (r.min.to_vec(), r.max.to_vec()),
            Domain::RectUnion { rects } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for r in rects {
                    for i in 0..2 {
                        lo[i] = lo[i].min(r.min[i]);
                        hi[i] = hi[i].max(r.max[i]);
                    }
                }
                (lo, hi)
            }
            Domain::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo, hi)
            }
            Domain::Cube { min, max } => (min.to_vec(), max.to_vec()),
        }
    }

    /// Area (2D) or volume (3D).
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Rect(r) => r.area(),
            Domain::RectUnion { rects } => union_area(rects),
            Domain::RectMinusPolygon { outer, hole } => outer.area() - polygon_signed_area(hole).abs(),
            Domain::Polygon { vertices } => polygon_signed_area(vertices).abs(),
            Domain::Cube { min, max } => (0..3).map(|i| max[i] - min[i]).product(),
        }
    }

    /// The pieces making up ∂Ω.
    pub fn boundary(&self) -> Vec<Primitive> {
        match self {
            Domain::Rect(r) => r.edges(),
            Domain::RectUnion { rects } => union_boundary(rects),
            Domain::RectMinusPolygon { outer, hole } => {
                let mut edges = outer.edges();
                edges.extend(polygon_edges(hole));
                edges
            }
            Domain::Polygon { vertices } => polygon_edges(vertices),
            Domain::Cube { min, max } => cube_faces(min, max),
        }
    }
}

/// The six faces of an axis-aligned box, ordered x=min, x=max, y=min, y=max,
/// z=min, z=max.
pub fn cube_faces(min: &[f64; 3], max: &[f64; 3]) -> Vec<Primitive> {
    let ext = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
    let mut faces = Vec::with_capacity(6);
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        let (a1, a2) = (a1.min(a2), a1.max(a2));
        let mut u = [0.0; 3];
        let mut v = [0.0; 3];
        u[a1] = ext[a1];
        v[a2] = ext[a2];
        for side in [min[axis], max[axis]] {
            let mut origin = *min;
            origin[axis] = side;
            faces.push(Primitive::Face { origin, u, v });
        }
    }
    faces
}

fn union_area(rects: &[Rect]) -> f64 {
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.min[0], r.max[0]]).collect();
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.min[1], r.max[1]]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.dedup();
    ys.dedup();
    let mut area = 0.0;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let c = [(wx[0] + wx[1]) / 2.0, (wy[0] + wy[1]) / 2.0];
            if rects.iter().any(|r| r.contains(&c, 0.0)) {
                area += (wx[1] - wx[0]) * (wy[1] - wy[0]);
            }
        }
    }
    area
}

/// Outer boundary of a union of rectangles: every rectangle edge is split at
/// the other rectangles' coordinates and pieces with the union on both sides
/// are dropped.
fn union_boundary(rects: &[Rect]) -> Vec<Primitive> {
    let inside = |p: [f64; 2]| rects.iter().any(|r| r.contains(&p, 0.0));
    let mut out = Vec::new();
    for r in rects {
        for edge in r.edges() {
            let Primitive::Segment { a, b } = edge else {
                unreachable!()
            };
            let axis = if a[1] == b[1] { 0 } else { 1 };
            let (lo, hi) = (a[axis].min(b[axis]), a[axis].max(b[axis]));
            let mut cuts = vec![lo, hi];
            for other in rects {
                for c in [other.min[axis], other.max[axis]] {
                    if c > lo && c < hi {
                        cuts.push(c);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for w in cuts.windows(2) {
                let mid = (w[0] + w[1]) / 2.0;
                let mut p = a;
                p[axis] = mid;
                let eps = 1e-9 * (1.0 + mid.abs());
                let normal_axis = 1 - axis;
                let mut plus = p;
                let mut minus = p;
                plus[normal_axis] += eps;
                minus[normal_axis] -= eps;
                if inside(plus) && inside(minus) {
                    continue;
                }
                let mut pa = a;
                let mut pb = a;
                pa[axis] = w[0];
                pb[axis] = w[1];
                out.push(Primitive::Segment { a: pa, b: pb });
            }
        }
    }
    out
}

/// `n` uniform samples strictly inside `domain`, by rejection from its
/// bounding box. Deterministic for a fixed seed.
pub fn sample_interior(domain: &Domain, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    domain.validate()?;
    let (lo, hi) = domain.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts: usize = 0;
    while out.len() < n {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..*h)).collect();
        attempts += 1;
        if domain.contains_strictly(&x) {
            out.push(x);
        }
        if attempts % 1000 == 0 && (out.len() as f64) < 0.01 * attempts as f64 {
            return Err(Error::Geometry(format!(
                "rejection sampling accepted {} of {attempts} draws",
                out.len()
            )));
        }
    }
    Ok(out)
}
