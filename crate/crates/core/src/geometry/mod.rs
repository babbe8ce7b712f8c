//! Scenario geometry: domains, boundary pieces, decompositions, samplers and
//! distance fields.

mod domain;
mod primitive;

use serde::{Deserialize, Serialize};

pub use domain::{
    cube_faces, polygon_contains, polygon_edges, polygon_signed_area, sample_interior, Domain, Rect, GEOM_TOL,
};
pub use primitive::{distance_jet, distance_to, Primitive};

use crate::error::{Error, Result};

/// Tolerance for deciding that a point lies on an interface.
pub const INTERFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet(f64),
    /// Zero normal derivative.
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub primitive: Primitive,
    pub condition: BoundaryCondition,
}

impl BoundarySegment {
    pub fn dirichlet(primitive: Primitive, value: f64) -> Self {
        Self {
            primitive,
            condition: BoundaryCondition::Dirichlet(value),
        }
    }

    pub fn neumann(primitive: Primitive) -> Self {
        Self {
            primitive,
            condition: BoundaryCondition::Neumann,
        }
    }

    pub fn dirichlet_value(&self) -> Option<f64> {
        match self.condition {
            BoundaryCondition::Dirichlet(v) => Some(v),
            BoundaryCondition::Neumann => None,
        }
    }
}

/// Points along a boundary piece: `n` evenly spaced including both endpoints
/// (faces: an `n × n` grid).
pub fn sample_boundary(segment: &Primitive, n: usize) -> Result<Vec<Vec<f64>>> {
    segment.sample(n)
}

pub fn in_domain(domain: &Domain, x: &[f64]) -> bool {
    domain.contains(x)
}

/// A straight cut shared by two subdomains, `pair.0 < pair.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub segment: Primitive,
    pub pair: (usize, usize),
    /// Unit normal pointing from `pair.0` into `pair.1`.
    pub normal: [f64; 2],
}

/// Unit normal of `interface` at `x`, oriented from the lower-indexed
/// subdomain into the higher one.
pub fn interface_normal(interface: &Interface, x: &[f64]) -> Result<[f64; 2]> {
    let d = interface.segment.distance(x);
    if d > INTERFACE_TOL {
        return Err(Error::Geometry(format!("point {x:?} is {d:e} away from the interface")));
    }
    Ok(interface.normal)
}

/// Where a point of a decomposed domain falls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Subdomain(usize),
    Interface { index: usize, pair: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDecomposition {
    pub subdomains: Vec<Domain>,
    pub interfaces: Vec<Interface>,
}

impl DomainDecomposition {
    /// Builds a decomposition from subdomains and the cuts between them. Each
    /// cut must border exactly two subdomains; the normal is oriented from the
    /// lower index to the higher.
    pub fn new(subdomains: Vec<Domain>, cuts: Vec<Primitive>) -> Result<Self> {
        for s in &subdomains {
            s.validate()?;
        }
        let mut interfaces = Vec::with_capacity(cuts.len());
        for cut in cuts {
            let Primitive::Segment { a, b } = cut else {
                return Err(Error::Geometry("interfaces must be 2D segments".into()));
            };
            let n = cut
                .segment_normal()
                .filter(|n| n[0].is_finite() && n[1].is_finite())
                .ok_or_else(|| Error::Geometry("degenerate interface".into()))?;
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let delta = 1e-6 * cut.length();
            let plus = [mid[0] + delta * n[0], mid[1] + delta * n[1]];
            let minus = [mid[0] - delta * n[0], mid[1] - delta * n[1]];
            let owner = |p: &[f64; 2]| -> Result<usize> {
                let hits: Vec<usize> = (0..subdomains.len())
                    .filter(|&i| subdomains[i].contains_strictly(p))
                    .collect();
                match hits.as_slice() {
                    [i] => Ok(*i),
                    _ => Err(Error::Geometry(format!(
                        "interface side {p:?} lies in {} subdomains",
                        hits.len()
                    ))),
                }
            };
            let (ip, im) = (owner(&plus)?, owner(&minus)?);
            if ip == im {
                return Err(Error::Geometry("interface does not separate two subdomains".into()));
            }
            let (pair, normal) = if im < ip {
                ((im, ip), n)
            } else {
                ((ip, im), [-n[0], -n[1]])
            };
            interfaces.push(Interface {
                segment: cut,
                pair,
                normal,
            });
        }
        Ok(Self { subdomains, interfaces })
    }

    /// Interface points take precedence; otherwise the first subdomain whose
    /// closure holds `x`.
    pub fn locate(&self, x: &[f64]) -> Result<Location> {
        for (index, iface) in self.interfaces.iter().enumerate() {
            if iface.segment.distance(x) <= INTERFACE_TOL {
                return Ok(Location::Interface {
                    index,
                    pair: iface.pair,
                });
            }
        }
        self.subdomains
            .iter()
            .position(|s| s.contains(x))
            .map(Location::Subdomain)
            .ok_or_else(|| Error::OutsideDomain(x.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }
}

/// Vertices of the heater: an equilateral triangle of side 4 centred at
/// (5, 5) with its apex pointing up, listed counter-clockwise from the
/// bottom-left corner.
pub fn heater_triangle() -> [[f64; 2]; 3] {
    let side = 4.0;
    let height = side * 3f64.sqrt() / 2.0;
    let base_y = 5.0 - height / 3.0;
    [[3.0, base_y], [7.0, base_y], [5.0, 5.0 + 2.0 * height / 3.0]]
}

/// Splits the heater box `[0,10]²` minus the triangle into three
/// simply-connected regions with straight cuts from each vertex radially
/// outward: region 0 upper-left, region 1 upper-right, region 2 below.
pub fn heater_decomposition(domain: &Domain) -> Result<DomainDecomposition> {
    let Domain::RectMinusPolygon { outer, hole } = domain else {
        return Err(Error::Geometry(
            "heater decomposition needs a box with a triangular hole".into(),
        ));
    };
    if hole.len() != 3 {
        return Err(Error::Geometry("heater hole must be a triangle".into()));
    }
    let centroid = [
        (hole[0][0] + hole[1][0] + hole[2][0]) / 3.0,
        (hole[0][1] + hole[1][1] + hole[2][1]) / 3.0,
    ];
    let exit = |v: [f64; 2]| -> [f64; 2] {
        let d = [v[0] - centroid[0], v[1] - centroid[1]];
        let mut t = f64::INFINITY;
        for axis in 0..2 {
            if d[axis] > 0.0 {
                t = t.min((outer.max[axis] - v[axis]) / d[axis]);
            } else if d[axis] < 0.0 {
                t = t.min((outer.min[axis] - v[axis]) / d[axis]);
            }
        }
        let mut p = [v[0] + t * d[0], v[1] + t * d[1]];
        // Snap the coordinate that hit the wall exactly onto it.
        for axis in 0..2 {
            for wall in [outer.min[axis], outer.max[axis]] {
                if (p[axis] - wall).abs() < 1e-12 * (1.0 + wall.abs()) {
                    p[axis] = wall;
                }
            }
        }
        p
    };
    let [bl, br, apex] = [hole[0], hole[1], hole[2]];
    let (e_bl, e_br, e_apex) = (exit(bl), exit(br), exit(apex));
    let on_left = e_bl[0] == outer.min[0];
    let on_right = e_br[0] == outer.max[0];
    let on_top = e_apex[1] == outer.max[1];
    if !(on_left && on_right && on_top) {
        return Err(Error::Geometry("triangle cuts do not reach the expected walls".into()));
    }
    let upper_left = vec![e_bl, bl, apex, e_apex, [outer.min[0], outer.max[1]]];
    let upper_right = vec![br, e_br, outer.max, e_apex, apex];
    let lower = vec![outer.min, [outer.max[0], outer.min[1]], e_br, br, bl, e_bl];
    DomainDecomposition::new(
        vec![
            Domain::Polygon { vertices: upper_left },
            Domain::Polygon { vertices: upper_right },
            Domain::Polygon { vertices: lower },
        ],
        vec![
            Primitive::Segment { a: apex, b: e_apex },
            Primitive::Segment { a: bl, b: e_bl },
            Primitive::Segment { a: br, b: e_br },
        ],
    )
}

/// A Dirichlet sample: location and prescribed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub x: Vec<f64>,
    pub value: f64,
}

/// A point on a zero-flux wall with the wall's unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSample {
    pub x: Vec<f64>,
    pub normal: Vec<f64>,
}

/// Fixed training samples, drawn once per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub boundary: Vec<BoundarySample>,
    pub interior: Vec<Vec<f64>>,
    /// One list per interface of the decomposition (empty without one).
    pub interfaces: Vec<Vec<Vec<f64>>>,
    /// Points on Neumann pieces, corners excluded.
    #[serde(default)]
    pub walls: Vec<WallSample>,
}

impl SamplePlan {
    /// `n_boundary` points per boundary segment (per axis on faces),
    /// `n_interior` collocation points and `n_boundary` points per interface.
    pub fn build(
        domain: &Domain,
        segments: &[BoundarySegment],
        decomposition: Option<&DomainDecomposition>,
        n_boundary: usize,
        n_interior: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut boundary = Vec::new();
        let mut walls = Vec::new();
        for (i, seg) in segments.iter().enumerate() {
            let points = sample_boundary(&seg.primitive, n_boundary)?;
            match seg.dirichlet_value() {
                Some(value) => boundary.extend(points.into_iter().map(|x| BoundarySample { x, value })),
                None => {
                    let normal = seg.primitive.unit_normal();
                    let others: Vec<Primitive> = segments
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, s)| s.primitive.clone())
                        .collect();
                    walls.extend(
                        points
                            .into_iter()
                            .filter(|x| others.is_empty() || distance_to(&others, x) > GEOM_TOL)
                            .map(|x| WallSample {
                                x,
                                normal: normal.clone(),
                            }),
                    );
                }
            }
        }
        let interior = sample_interior(domain, n_interior, seed)?;
        let interfaces = match decomposition {
            Some(dec) => dec
                .interfaces
                .iter()
                .map(|i| sample_boundary(&i.segment, n_boundary))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        Ok(Self {
            boundary,
            interior,
            interfaces,
            walls,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heater() -> Domain {
        Domain::RectMinusPolygon {
            outer: Rect::new([0.0, 0.0], [10.0, 10.0]),
            hole: heater_triangle().to_vec(),
        }
    }

    #[test]
    fn heater_triangle_is_equilateral() {
        let t = heater_triangle();
        let side = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            assert!((side(a, b) - 4.0).abs() < 1e-12);
        }
        assert!((polygon_signed_area(&t) - 4.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heater_decomposition_conserves_area() {
        let dec = heater_decomposition(&heater()).unwrap();
        assert_eq!(dec.len(), 3);
        let total: f64 = dec.subdomains.iter().map(|s| s.measure()).sum();
        assert!((total - (100.0 - 4.0 * 3f64.sqrt())).abs() < 1e-9);
        for s in &dec.subdomains {
            let Domain::Polygon { vertices } = s else { panic!() };
            assert!(polygon_signed_area(vertices) > 0.0);
        }
    }

    #[test]
    fn heater_interfaces_border_two_subdomains() {
        let dec = heater_decomposition(&heater()).unwrap();
        assert_eq!(dec.interfaces[0].pair, (0, 1));
        assert_eq!(dec.interfaces[1].pair, (0, 2));
        assert_eq!(dec.interfaces[2].pair, (1, 2));
        for iface in &dec.interfaces {
            for x in sample_boundary(&iface.segment, 100).unwrap() {
                let owners = dec.subdomains.iter().filter(|s| s.contains(&x)).count();
                assert_eq!(owners, 2, "{x:?}");
                let n = interface_normal(iface, &x).unwrap();
                assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-15);
                let Primitive::Segment { a, b } = iface.segment else {
                    panic!()
                };
                assert!((n[0] * (b[0] - a[0]) + n[1] * (b[1] - a[1])).abs() < 1e-12);
            }
        }
        assert!(interface_normal(&dec.interfaces[0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn triangle_edge_samples_satisfy_line_equation() {
        let t = heater_triangle();
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            for p in sample_boundary(&Primitive::Segment { a, b }, 100).unwrap() {
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                assert!(cross.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heater_interior_samples_avoid_triangle() {
        let pts = sample_interior(&heater(), 1024, 3).unwrap();
        let t = heater_triangle();
        assert!(pts.iter().all(|p| !polygon_contains(&t, p, 0.0)));
    }

    #[test]
    fn electrostatics_normal_points_up() {
        let dec = DomainDecomposition::new(
            vec![
                Domain::Rect(Rect::new([0.0, 0.0], [1.0, 0.5])),
                Domain::Rect(Rect::new([0.0, 0.5], [1.0, 1.0])),
            ],
            vec![Primitive::Segment {
                a: [1.0, 0.5],
                b: [0.0, 0.5],
            }],
        )
        .unwrap();
        assert_eq!(interface_normal(&dec.interfaces[0], &[0.3, 0.5]).unwrap(), [0.0, 1.0]);
        assert_eq!(
            dec.locate(&[0.3, 0.5]).unwrap(),
            Location::Interface { index: 0, pair: (0, 1) }
        );
        assert_eq!(dec.locate(&[0.3, 0.2]).unwrap(), Location::Subdomain(0));
        assert!(dec.locate(&[1.3, 0.2]).is_err());
    }

    #[test]
    fn wall_samples_skip_corners_and_carry_unit_normals() {
        let sq = Rect::new([0.0, 0.0], [1.0, 1.0]);
        let segments: Vec<BoundarySegment> = sq
            .edges()
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                if i == 0 {
                    BoundarySegment::dirichlet(e, 1.0)
                } else {
                    BoundarySegment::neumann(e)
                }
            })
            .collect();
        let plan = SamplePlan::build(&Domain::Rect(sq), &segments, None, 11, 4, 0).unwrap();
        assert_eq!(plan.boundary.len(), 11);
        assert_eq!(plan.walls.len(), 3 * 9);
        for w in &plan.walls {
            let corner = w.x.iter().all(|&v| v == 0.0 || v == 1.0);
            assert!(!corner, "{:?}", w.x);
            assert!((w.normal[0].hypot(w.normal[1]) - 1.0).abs() < 1e-15);
            let on_vertical = w.x[0] == 0.0 || w.x[0] == 1.0;
            assert_eq!(w.normal[1] == 0.0, on_vertical);
        }
        let face = Primitive::Face {
            origin: [0.0; 3],
            u: [0.0, 2.0, 0.0],
            v: [0.0, 0.0, 1.0],
        };
        assert_eq!(face.unit_normal(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_square_distances() {
        let sq = Domain::Rect(Rect::new([0.0, 0.0], [1.0, 1.0]));
        let b = sq.boundary();
        assert_eq!(distance_to(&b, &[0.5, 0.5]), 0.5);
        assert_eq!(distance_to(&b, &[0.0, 0.3]), 0.0);
        assert!(in_domain(&sq, &[1.0, 1.0]));
        assert!(!in_domain(&sq, &[1.0, 1.1]));
    }
}
