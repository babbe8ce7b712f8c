use serde::{Deserialize, Serialize};

use crate::diffcore::Jet;
use crate::error::{Error, Result};

/// A straight boundary piece: a segment in 2D or a parallelogram face in 3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Segment {
        a: [f64; 2],
        b: [f64; 2],
    },
    /// `origin + s·u + t·v` for `s, t ∈ [0, 1]`; `u` and `v` are orthogonal.
    Face {
        origin: [f64; 3],
        u: [f64; 3],
        v: [f64; 3],
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closest point on a primitive together with the directions along which it
/// can still slide (the tangent space of the active face).
struct Projection {
    point: [f64; 3],
    tangents: Vec<[f64; 3]>,
}

impl Primitive {
    pub fn dim(&self) -> usize {
        match self {
            Primitive::Segment { .. } => 2,
            Primitive::Face { .. } => 3,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Primitive::Segment { a, b } => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            Primitive::Face { u, v, .. } => dot(u, u).sqrt().max(dot(v, v).sqrt()),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Primitive::Segment { .. } => self.length() == 0.0,
            Primitive::Face { u, v, .. } => dot(u, u) == 0.0 || dot(v, v) == 0.0,
        }
    }

    fn project(&self, x: &[f64]) -> Projection {
        match self {
            Primitive::Segment { a, b } => {
                let d = [b[0] - a[0], b[1] - a[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2;
                if t <= 0.0 {
                    Projection {
                        point: [a[0], a[1], 0.0],
                        tangents: vec![],
                    }
                } else if t >= 1.0 {
                    Projection {
                        point: [b[0], b[1], 0.0],
                        tangents: vec![],
                    }
                } else {
                    let len = len2.sqrt();
                    Projection {
                        point: [a[0] + t * d[0], a[1] + t * d[1], 0.0],
                        tangents: vec![[d[0] / len, d[1] / len, 0.0]],
                    }
                }
            }
            Primitive::Face { origin, u, v } => {
                let r = [x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]];
                let uu = dot(u, u);
                let vv = dot(v, v);
                let s = dot(&r, u) / uu;
                let t = dot(&r, v) / vv;
                let mut tangents = Vec::new();
                let sc = if s <= 0.0 {
                    0.0
                } else if s >= 1.0 {
                    1.0
                } else {
                    let n = uu.sqrt();
                    tangents.push([u[0] / n, u[1] / n, u[2] / n]);
                    s
                };
                let tc = if t <= 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    let n = vv.sqrt();
                    tangents.push([v[0] / n, v[1] / n, v[2] / n]);
                    t
                };
                let mut point = [0.0; 3];
                for i in 0..3 {
                    point[i] = origin[i] + sc * u[i] + tc * v[i];
                }
                Projection { point, tangents }
            }
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        if let Primitive::Segment { a, b } = self {
            // Perpendicular distance via the cross product is exact for points
            // on axis-aligned segments, where the projected point may not be.
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2;
            if t > 0.0 && t < 1.0 {
                return (d[0] * (x[1] - a[1]) - d[1] * (x[0] - a[0])).abs() / len2.sqrt();
            }
        }
        let p = self.project(x);
        (0..self.dim()).map(|i| (x[i] - p.point[i]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// `n` uniformly spaced samples including both endpoints (faces: an
    /// `n × n` grid including the edges).
    pub fn sample(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        if n < 2 {
            return Err(Error::Geometry(format!(
                "need at least 2 samples per boundary piece, got {n}"
            )));
        }
        if self.is_degenerate() {
            return Err(Error::Geometry("degenerate boundary piece".into()));
        }
        let step = |i: usize| i as f64 / (n - 1) as f64;
        Ok(match self {
            Primitive::Segment { a, b } => (0..n)
                .map(|i| {
                    let t = step(i);
                    vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                })
                .collect(),
            Primitive::Face { origin, u, v } => {
                let mut pts = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let (s, t) = (step(i), step(j));
                        pts.push((0..3).map(|k| origin[k] + s * u[k] + t * v[k]).collect());
                    }
                }
                pts
            }
        })
    }

    /// Unit normal of a segment, rotated 90° counter-clockwise from `b − a`.
    pub fn segment_normal(&self) -> Option<[f64; 2]> {
        match self {
            Primitive::Segment { a, b } => {
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                Some([-d[1] / len, d[0] / len])
            }
            Primitive::Face { .. } => None,
        }
    }

    /// Unit normal of either kind of piece; faces use `u × v`.
    pub fn unit_normal(&self) -> Vec<f64> {
        match self {
            Primitive::Segment { .. } => self.segment_normal().expect("segment").to_vec(),
            Primitive::Face { u, v, .. } => {
                let c = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                let len = dot(&c, &c).sqrt();
                c.iter().map(|x| x / len).collect()
            }
        }
    }
}

/// Euclidean distance from `x` to the nearest of `set`.
pub fn distance_to(set: &[Primitive], x: &[f64]) -> f64 {
    set.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min)
}

/// Distance to the nearest primitive of `set` as a jet. Away from the set
/// the Hessian of the distance is `(I − u uᵀ − P_T) / d`, where `u` is the unit
/// vector from the nearest point and `P_T` projects onto the directions in
/// which the nearest point slides. On the set itself the derivatives are left
/// at zero.
pub fn distance_jet(set: &[Primitive], x: &[f64]) -> Result<Jet> {
    let dim = x.len();
    let nearest = set
        .iter()
        .map(|p| (p.distance(x), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Geometry("empty boundary set".into()))?;
    let (d, prim) = nearest;
    if prim.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: prim.dim(),
            got: dim,
        });
    }
    let mut jet = Jet::constant(dim, d);
    if d == 0.0 {
        return Ok(jet);
    }
    let proj = prim.project(x);
    let mut u = [0.0; 3];
    for i in 0..dim {
        u[i] = (x[i] - proj.point[i]) / d;
        jet.grad[i] = u[i];
    }
    for i in 0..dim {
        for j in i..dim {
            let mut h = if i == j { 1.0 } else { 0.0 } - u[i] * u[j];
            for t in &proj.tangents {
                h -= t[i] * t[j];
            }
            jet.hess[i][j] = h / d;
            jet.hess[j][i] = h / d;
        }
    }
    Ok(jet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_samples_include_endpoints() {
        let s = Primitive::Segment {
            a: [0.0, 0.0],
            b: [1.0, 0.0],
        };
        assert_eq!(
            s.sample(3).unwrap(),
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]]
        );
        let long = Primitive::Segment {
            a: [0.0, 0.0],
            b: [10.0, 0.0],
        };
        let pts = long.sample(100).unwrap();
        assert!((pts[1][0] - 10.0 / 99.0).abs() < 1e-15);
        assert!(s.sample(1).is_err());
        let degenerate = Primitive::Segment {
            a: [1.0, 1.0],
            b: [1.0, 1.0],
        };
        assert!(degenerate.sample(4).is_err());
    }

    #[test]
    fn face_samples_form_a_grid() {
        let f = Primitive::Face {
            origin: [0.0, 0.0, 0.0],
            u: [0.0, 1.0, 0.0],
            v: [0.0, 0.0, 1.0],
        };
        let pts = f.sample(4).unwrap();
        assert_eq!(pts.len(), 16);
        assert!(pts.iter().all(|p| p[0] == 0.0));
    }

    #[test]
    fn distance_jet_matches_finite_differences() {
        let set = vec![
            Primitive::Segment {
                a: [0.0, 0.0],
                b: [1.0, 0.0],
            },
            Primitive::Segment {
                a: [1.0, 0.0],
                b: [1.0, 1.0],
            },
        ];
        let h = 1e-5;
        for x in [[0.3, 0.2], [1.4, -0.3], [1.2, 0.5], [-0.5, -0.5]] {
            let jet = distance_jet(&set, &x).unwrap();
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let g = (distance_to(&set, &xp) - distance_to(&set, &xm)) / (2.0 * h);
                assert!((g - jet.grad[i]).abs() < 1e-7);
                let hii = (distance_to(&set, &xp) - 2.0 * jet.value + distance_to(&set, &xm)) / (h * h);
                assert!(
                    (hii - jet.hess[i][i]).abs() < 1e-3,
                    "{x:?} {i}: {hii} {}",
                    jet.hess[i][i]
                );
            }
        }
    }

    #[test]
    fn face_distance_regions() {
        let f = Primitive::Face {
            origin: [0.0, 0.0, 0.0],
            u: [1.0, 0.0, 0.0],
            v: [0.0, 1.0, 0.0],
        };
        assert!((f.distance(&[0.5, 0.5, 2.0]) - 2.0).abs() < 1e-15);
        assert!((f.distance(&[2.0, 0.5, 0.0]) - 1.0).abs() < 1e-15);
        assert!((f.distance(&[2.0, 2.0, 1.0]) - 3f64.sqrt()).abs() < 1e-15);
        let jet = distance_jet(&[f], &[0.5, 0.5, 2.0]).unwrap();
        assert_eq!(jet.laplacian(), 0.0);
    }
}
