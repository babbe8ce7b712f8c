use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use super::grid::FieldGrid;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, BoundarySegment, Domain};

pub const DEFAULT_OMEGA: f64 = 1.9;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Piecewise-constant permittivity across a plane `x[axis] = at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layered {
    pub axis: usize,
    pub at: f64,
    pub below: f64,
    pub above: f64,
}

impl Layered {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x[self.axis] - self.at;
        if d.abs() < 1e-12 {
            0.5 * (self.below + self.above)
        } else if d < 0.0 {
            self.below
        } else {
            self.above
        }
    }
}

/// Harmonic function carrying a Dirichlet jump where two perpendicular
/// boundary pieces meet at a corner (2D) or edge (3D):
/// `(value_b − value_a)·(2/π)·atan2(r·dir_b, r·dir_a)` with `r = x − apex`.
/// It equals `0` along `dir_a` and `value_b − value_a` along `dir_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSingularity {
    pub apex: Vec<f64>,
    pub dir_a: Vec<f64>,
    pub value_a: f64,
    pub dir_b: Vec<f64>,
    pub value_b: f64,
}

impl CornerSingularity {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let (mut u, mut v) = (0.0, 0.0);
        for k in 0..x.len() {
            let r = x[k] - self.apex[k];
            u += r * self.dir_a[k];
            v += r * self.dir_b[k];
        }
        let jump = self.value_b - self.value_a;
        if u.hypot(v) < 1e-14 {
            return 0.5 * jump;
        }
        jump * FRAC_2_PI * v.atan2(u)
    }
}

type Override<'a> = Box<dyn Fn(&[f64]) -> Option<f64> + 'a>;

/// Settings of [`fd_solve`]. Built with [`FdProblem::new`] and the `with_*`
/// methods.
pub struct FdProblem<'a> {
    pub domain: &'a Domain,
    pub segments: &'a [BoundarySegment],
    pub h: f64,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub permittivity: Option<Layered>,
    pub singularities: Vec<CornerSingularity>,
    boundary_override: Option<Override<'a>>,
}

impl<'a> FdProblem<'a> {
    pub fn new(domain: &'a Domain, segments: &'a [BoundarySegment], h: f64) -> Self {
        Self {
            domain,
            segments,
            h,
            omega: DEFAULT_OMEGA,
            tol: 1e-10,
            max_iter: DEFAULT_MAX_ITER,
            permittivity: None,
            singularities: Vec::new(),
            boundary_override: None,
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_permittivity(mut self, eps: Layered) -> Self {
        self.permittivity = Some(eps);
        self
    }

    pub fn with_singularities(mut self, s: Vec<CornerSingularity>) -> Self {
        self.singularities = s;
        self
    }

    /// Replaces the value at Dirichlet nodes where `f` returns `Some`.
    pub fn with_boundary_values(mut self, f: impl Fn(&[f64]) -> Option<f64> + 'a) -> Self {
        self.boundary_override = Some(Box::new(f));
        self
    }
}

#[derive(Debug, Clone)]
pub struct FdSolution {
    pub grid: FieldGrid,
    pub iterations: usize,
    /// Largest normalised stencil residual `|Σ w u_nb / Σ w − u|` over free
    /// nodes after the last sweep.
    pub residual: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Free,
    Fixed,
    Outside,
}

/// Optimal SOR factor for the model problem with `n` intervals per side.
pub fn optimal_omega(n: usize) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin())
}

/// Classic entry point: SOR on the 5/7-point stencil with the given `omega`.
pub fn fd_laplace_solve(
    domain: &Domain,
    segments: &[BoundarySegment],
    h: f64,
    omega: f64,
    tol: f64,
) -> Result<FieldGrid> {
    let sol = fd_solve(FdProblem::new(domain, segments, h).with_omega(omega).with_tol(tol))?;
    Ok(sol.grid)
}

fn lattice(domain: &Domain, h: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
    }
    let (lo, hi) = domain.bounding_box();
    let mut dims = Vec::with_capacity(lo.len());
    for k in 0..lo.len() {
        let cells = (hi[k] - lo[k]) / h;
        let n = cells.round();
        if (cells - n).abs() > 1e-6 * cells.max(1.0) || n < 2.0 {
            return Err(Error::Config(format!(
                "spacing {h} does not divide the extent {} of axis {k}",
                hi[k] - lo[k]
            )));
        }
        dims.push(n as usize + 1);
    }
    Ok((lo, dims))
}

/// Value of the nearest Dirichlet piece within `reach`; ties are averaged.
fn nearest_dirichlet(segments: &[BoundarySegment], x: &[f64], reach: f64) -> Option<(f64, f64)> {
    let mut best = f64::INFINITY;
    let mut sum = 0.0;
    let mut count = 0;
    for s in segments {
        let Some(v) = s.dirichlet_value() else { continue };
        let d = s.primitive.distance(x);
        if d > reach {
            continue;
        }
        if d < best - 1e-12 {
            best = d;
            sum = v;
            count = 1;
        } else if (d - best).abs() <= 1e-12 {
            sum += v;
            count += 1;
        }
    }
    (count > 0).then(|| (sum / count as f64, best))
}

/// Successive over-relaxation on a conservative face-weighted stencil.
///
/// Nodes of the closed domain within `h/2` of a Dirichlet piece are fixed;
/// off-grid pieces clamp their nearby nodes, which are then masked out of
/// the returned grid. Nodes inside a hole of the domain are fixed to the
/// nearest Dirichlet value. Neighbours outside the domain are mirrored, so
/// pieces marked Neumann get a zero normal derivative.
pub fn fd_solve(p: FdProblem<'_>) -> Result<FdSolution> {
    if !(p.omega > 0.0 && p.omega < 2.0) {
        return Err(Error::Config(format!("SOR factor must lie in (0, 2), got {}", p.omega)));
    }
    if !(p.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", p.tol)));
    }
    if p.permittivity.is_some() && !p.singularities.is_empty() {
        return Err(Error::Config("corner subtraction assumes a homogeneous medium".into()));
    }
    if p.segments.iter().all(|s| s.condition == BoundaryCondition::Neumann) {
        return Err(Error::Config(
            "at least one Dirichlet boundary piece is required".into(),
        ));
    }
    let (origin, dims) = lattice(p.domain, p.h)?;
    let mut grid = FieldGrid::new(origin, p.h, dims)?;
    let n = grid.len();
    let d = grid.dim();
    let hole = match p.domain {
        Domain::RectMinusPolygon { hole, .. } => Some(hole.as_slice()),
        _ => None,
    };

    let singular = |x: &[f64]| -> f64 { p.singularities.iter().map(|s| s.eval(x)).sum() };
    let mut kind = vec![Node::Outside; n];
    let mut u = vec![0.0; n];
    let (mut fixed_sum, mut fixed_count) = (0.0, 0usize);
    for idx in 0..n {
        let x = grid.node(idx);
        let inside = p.domain.contains(&x);
        let value = if inside {
            grid.mask[idx] = true;
            match nearest_dirichlet(p.segments, &x, 0.5 * p.h) {
                Some((v, dist)) => {
                    if dist > 1e-9 * p.h {
                        grid.mask[idx] = false;
                    }
                    Some(v)
                }
                None => None,
            }
        } else {
            grid.mask[idx] = false;
            match hole {
                Some(hole) if crate::geometry::polygon_contains(hole, &x, 0.0) => Some(
                    nearest_dirichlet(p.segments, &x, f64::INFINITY)
                        .map(|t| t.0)
                        .unwrap_or(0.0),
                ),
                _ => None,
            }
        };
        if let Some(v) = value {
            let v = p.boundary_override.as_ref().and_then(|f| f(&x)).unwrap_or(v);
            kind[idx] = Node::Fixed;
            u[idx] = v - singular(&x);
            fixed_sum += u[idx];
            fixed_count += 1;
        } else if inside {
            kind[idx] = Node::Free;
        }
    }
    if fixed_count == 0 {
        return Err(Error::Config("no grid node carries a Dirichlet value".into()));
    }
    let guess = fixed_sum / fixed_count as f64;

    // Flattened neighbour lists of the free nodes.
    let mut free = Vec::new();
    let mut start = vec![0u32];
    let mut nb: Vec<u32> = Vec::new();
    let mut wt: Vec<f64> = Vec::new();
    let mut wsum = Vec::new();
    let stride: Vec<usize> = (0..d).map(|a| grid.dims[..a].iter().product()).collect();
    for idx in 0..n {
        if kind[idx] != Node::Free {
            continue;
        }
        u[idx] = guess;
        let m = grid.multi_index(idx);
        let x = grid.node(idx);
        let mut total = 0.0;
        for a in 0..d {
            let step = |up: bool| -> Option<usize> {
                if up {
                    (m[a] + 1 < grid.dims[a]).then(|| idx + stride[a])
                } else {
                    (m[a] > 0).then(|| idx - stride[a])
                }
                .filter(|&q| kind[q] != Node::Outside)
            };
            for up in [false, true] {
                let Some(q) = step(up).or_else(|| step(!up)) else {
                    continue;
                };
                let w = match &p.permittivity {
                    Some(eps) => {
                        let mut mid = x.clone();
                        mid[a] += if up { 0.5 * p.h } else { -0.5 * p.h };
                        eps.eval(&mid)
                    }
                    None => 1.0,
                };
                nb.push(q as u32);
                wt.push(w);
                total += w;
            }
        }
        if total == 0.0 {
            return Err(Error::Geometry(format!("isolated grid node at {x:?}")));
        }
        free.push(idx);
        wsum.push(total);
        start.push(nb.len() as u32);
    }

    let relax = |u: &[f64], i: usize| -> f64 {
        let (s, e) = (start[i] as usize, start[i + 1] as usize);
        let mut acc = 0.0;
        for j in s..e {
            acc += wt[j] * u[nb[j] as usize];
        }
        acc / wsum[i] - u[free[i]]
    };
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    while last >= p.tol {
        if iterations == p.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: last,
            });
        }
        iterations += 1;
        last = 0.0;
        for i in 0..free.len() {
            let delta = p.omega * relax(&u, i);
            u[free[i]] += delta;
            last = last.max(delta.abs());
        }
    }
    let residual = (0..free.len()).map(|i| relax(&u, i).abs()).fold(0.0, f64::max);
    if residual >= 10.0 * p.tol {
        return Err(Error::NoConvergence { iterations, residual });
    }

    for idx in 0..n {
        grid.values[idx] = if kind[idx] == Node::Outside {
            f64::NAN
        } else {
            u[idx] + singular(&grid.node(idx))
        };
    }
    Ok(FdSolution {
        grid,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{Primitive, Rect};

    fn unit_square() -> Domain {
        Domain::Rect(Rect {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        })
    }

    fn sides(values: [f64; 4]) -> Vec<BoundarySegment> {
        let c = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        (0..4)
            .map(|i| {
                BoundarySegment::dirichlet(
                    Primitive::Segment {
                        a: c[i],
                        b: c[(i + 1) % 4],
                    },
                    values[i],
                )
            })
            .collect()
    }

    #[test]
    fn constant_boundary_gives_constant_field() {
        let g = fd_laplace_solve(&unit_square(), &sides([0.7; 4]), 1.0 / 16.0, 1.9, 1e-12).unwrap();
        assert!(g.values.iter().all(|v| (v - 0.7).abs() < 1e-11));
    }

    #[test]
    fn linear_data_is_reproduced() {
        let dom = unit_square();
        let segs = sides([0.0; 4]);
        let sol = fd_solve(
            FdProblem::new(&dom, &segs, 1.0 / 20.0)
                .with_tol(1e-13)
                .with_boundary_values(|x| Some(x[0])),
        )
        .unwrap();
        for idx in 0..sol.grid.len() {
            let x = sol.grid.node(idx);
            assert!((sol.grid.values[idx] - x[0]).abs() < 1e-9, "at {x:?}");
        }
    }

    #[test]
    fn neumann_side_gives_zero_normal_derivative() {
        let dom = unit_square();
        let mut segs = sides([0.0, 0.0, 1.0, 0.0]);
        segs[0] = BoundarySegment::neumann(segs[0].primitive.clone());
        segs[1] = BoundarySegment::neumann(segs[1].primitive.clone());
        segs[3] = BoundarySegment::neumann(segs[3].primitive.clone());
        let g = fd_laplace_solve(&dom, &segs, 0.1, 1.5, 1e-13).unwrap();
        assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn layered_medium_matches_series_resistance() {
        // u = 0 at y = 0, 1 at y = 1, insulated sides; flux continuity gives
        // a piecewise linear profile with the break at the interface.
        let dom = unit_square();
        let mut segs = sides([0.0, 0.0, 1.0, 0.0]);
        segs[1] = BoundarySegment::neumann(segs[1].primitive.clone());
        segs[3] = BoundarySegment::neumann(segs[3].primitive.clone());
        let (e1, e2) = (1.0, 4.0);
        let sol = fd_solve(
            FdProblem::new(&dom, &segs, 1.0 / 16.0)
                .with_tol(1e-13)
                .with_permittivity(Layered {
                    axis: 1,
                    at: 0.5,
                    below: e1,
                    above: e2,
                }),
        )
        .unwrap();
        let mid = 0.5 / e1 / (0.5 / e1 + 0.5 / e2);
        for idx in 0..sol.grid.len() {
            let y = sol.grid.node(idx)[1];
            let want = if y <= 0.5 {
                mid * y / 0.5
            } else {
                mid + (1.0 - mid) * (y - 0.5) / 0.5
            };
            assert!((sol.grid.values[idx] - want).abs() < 1e-9, "y = {y}");
        }
    }

    #[test]
    fn hole_nodes_are_clamped_and_masked() {
        let dom = Domain::RectMinusPolygon {
            outer: Rect {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            hole: vec![[0.3, 0.3], [0.7, 0.3], [0.5, 0.65]],
        };
        let mut segs = sides([0.0; 4]);
        let hole = [[0.3, 0.3], [0.7, 0.3], [0.5, 0.65]];
        for i in 0..3 {
            segs.push(BoundarySegment::dirichlet(
                Primitive::Segment {
                    a: hole[i],
                    b: hole[(i + 1) % 3],
                },
                1.0,
            ));
        }
        let g = fd_laplace_solve(&dom, &segs, 1.0 / 40.0, 1.8, 1e-11).unwrap();
        let c = g.index(&[20, 16]);
        assert!(!g.mask[c]);
        assert_eq!(g.values[c], 1.0);
        for idx in 0..g.len() {
            if g.mask[idx] {
                assert!((-1e-12..=1.0 + 1e-12).contains(&g.values[idx]));
            }
        }
    }

    #[test]
    fn singularity_subtraction_keeps_boundary_data() {
        let dom = unit_square();
        let segs = sides([0.0, 0.0, 0.0, 1.0]);
        let corners = vec![
            CornerSingularity {
                apex: vec![0.0, 0.0],
                dir_a: vec![1.0, 0.0],
                value_a: 0.0,
                dir_b: vec![0.0, 1.0],
                value_b: 1.0,
            },
            CornerSingularity {
                apex: vec![0.0, 1.0],
                dir_a: vec![1.0, 0.0],
                value_a: 0.0,
                dir_b: vec![0.0, -1.0],
                value_b: 1.0,
            },
        ];
        let plain = fd_laplace_solve(&dom, &segs, 1.0 / 32.0, 1.8, 1e-12).unwrap();
        let sub = fd_solve(FdProblem::new(&dom, &segs, 1.0 / 32.0).with_singularities(corners))
            .unwrap()
            .grid;
        for idx in 0..sub.len() {
            let m = sub.multi_index(idx);
            let on_edge = m[0] == 0 || m[1] == 0 || m[0] == 32 || m[1] == 32;
            if on_edge {
                assert!((sub.values[idx] - plain.values[idx]).abs() < 1e-12, "at {m:?}");
            } else {
                assert!((0.0..=1.0).contains(&sub.values[idx]));
            }
        }
    }

    #[test]
    fn bad_settings_are_rejected() {
        let dom = unit_square();
        let segs = sides([0.0; 4]);
        assert!(fd_laplace_solve(&dom, &segs, 0.3, 1.9, 1e-10).is_err());
        assert!(fd_laplace_solve(&dom, &segs, 0.1, 2.0, 1e-10).is_err());
        let r = fd_solve(FdProblem::new(&dom, &sides([0.0, 0.0, 0.0, 1.0]), 0.05).with_max_iter(3));
        assert!(matches!(r, Err(Error::NoConvergence { iterations: 3, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn maximum_principle(values in prop::array::uniform4(-5.0f64..5.0)) {
            let g = fd_laplace_solve(&unit_square(), &sides(values), 1.0 / 12.0, 1.7, 1e-12).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in &g.values {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }
}
