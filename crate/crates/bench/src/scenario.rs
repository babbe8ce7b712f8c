//! The five benchmark problems and their reference solutions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use harmonia_core::geometry::{
    cube_faces, heater_decomposition, heater_triangle, polygon_edges, BoundarySegment, Domain, DomainDecomposition,
    Primitive, Rect,
};
use harmonia_core::losses::{DielectricSpec, ProblemSpec};
use harmonia_core::oracle::{analytic_box, fd_solve, CornerSingularity, FdProblem, FieldGrid, Layered};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Electrostatics,
    HeatBox,
    Heater,
    Robot,
    Pipe3d,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::Electrostatics,
        ScenarioId::HeatBox,
        ScenarioId::Heater,
        ScenarioId::Robot,
        ScenarioId::Pipe3d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioId::Electrostatics => "electrostatics",
            ScenarioId::HeatBox => "heat_box",
            ScenarioId::Heater => "heater",
            ScenarioId::Robot => "robot",
            ScenarioId::Pipe3d => "pipe3d",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.id() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown scenario {s:?}")))
    }
}

/// Grid resolution preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fast,
    Paper,
}

/// Where reference values come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// The closed-form heated-box solution.
    AnalyticBox,
    FdGrid {
        /// Intervals along the longest side.
        cells: usize,
        permittivity: Option<Layered>,
        singularities: Vec<CornerSingularity>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    /// Cells per axis of the cell-centred evaluation grid.
    pub eval_cells: usize,
}

/// A materialised reference solution.
#[derive(Debug, Clone)]
pub enum Oracle {
    AnalyticBox,
    Grid(FieldGrid),
}

impl Oracle {
    pub fn value(&self, x: &[f64]) -> harmonia_core::Result<f64> {
        match self {
            Oracle::AnalyticBox => Ok(analytic_box(x[0], x[1])),
            Oracle::Grid(g) => g.sample(x),
        }
    }

    pub fn covers(&self, x: &[f64]) -> bool {
        match self {
            Oracle::AnalyticBox => true,
            Oracle::Grid(g) => g.covers(x),
        }
    }
}

fn unit_square() -> Rect {
    Rect::new([0.0, 0.0], [1.0, 1.0])
}

/// Edges of a rect with the value of the edge lying on `y = min`
/// set to `bottom` and `x = min` set to `left`; the rest are 0.
fn box_edges(r: Rect, bottom: f64, left: f64) -> Vec<BoundarySegment> {
    r.edges()
        .into_iter()
        .map(|e| {
            let v = match &e {
                Primitive::Segment { a, b } if a[1] == r.min[1] && b[1] == r.min[1] => bottom,
                Primitive::Segment { a, b } if a[0] == r.min[0] && b[0] == r.min[0] => left,
                _ => 0.0,
            };
            BoundarySegment::dirichlet(e, v)
        })
        .collect()
}

/// Vertices of the robot corridor, counter-clockwise from the origin.
pub const ROBOT_OUTLINE: [[f64; 2]; 8] = [
    [0.0, 0.0],
    [0.5, 0.0],
    [0.5, 0.4],
    [1.0, 0.4],
    [1.0, 1.0],
    [0.5, 1.0],
    [0.5, 0.6],
    [0.0, 0.6],
];

/// Start points of the robot paths.
pub fn robot_starts() -> Vec<[f64; 2]> {
    (0..5).map(|i| [0.05 + 0.1 * i as f64, 0.05]).collect()
}

/// Wedge functions for the two edges where `x = const` faces meet a
/// differently valued face of the unit cube.
fn pipe_edges() -> Vec<CornerSingularity> {
    let mut out = Vec::new();
    for (x0, inward, value) in [(0.0, 1.0, 1.0), (1.0, -1.0, -1.0)] {
        for axis in 1..3 {
            for (c, t) in [(0.0, 1.0), (1.0, -1.0)] {
                let mut apex = vec![0.0; 3];
                apex[0] = x0;
                apex[axis] = c;
                let mut dir_a = vec![0.0; 3];
                dir_a[axis] = t;
                let mut dir_b = vec![0.0; 3];
                dir_b[0] = inward;
                out.push(CornerSingularity {
                    apex,
                    dir_a,
                    value_a: value,
                    dir_b,
                    value_b: 0.0,
                });
            }
        }
    }
    out
}

impl Scenario {
    pub fn build(id: ScenarioId, preset: Preset) -> Result<Self> {
        let paper = preset == Preset::Paper;
        let (problem, oracle, eval_cells) = match id {
            ScenarioId::Electrostatics => {
                let lower = Rect::new([0.0, 0.0], [1.0, 0.5]);
                let upper = Rect::new([0.0, 0.5], [1.0, 1.0]);
                let problem = ProblemSpec {
                    domain: Domain::Rect(unit_square()),
                    segments: box_edges(unit_square(), 1.0, 0.0),
                    decomposition: Some(DomainDecomposition::new(
                        vec![Domain::Rect(lower), Domain::Rect(upper)],
                        vec![Primitive::Segment {
                            a: [0.0, 0.5],
                            b: [1.0, 0.5],
                        }],
                    )?),
                    dielectric: Some(DielectricSpec { eps1: 1.0, eps2: 0.01 }),
                };
                let oracle = OracleSpec::FdGrid {
                    cells: if paper { 256 } else { 128 },
                    permittivity: Some(Layered {
                        axis: 1,
                        at: 0.5,
                        below: 1.0,
                        above: 0.01,
                    }),
                    singularities: Vec::new(),
                };
                (problem, oracle, if paper { 256 } else { 128 })
            }
            ScenarioId::HeatBox => {
                let problem = ProblemSpec {
                    domain: Domain::Rect(unit_square()),
                    segments: box_edges(unit_square(), 0.0, 1.0),
                    decomposition: None,
                    dielectric: None,
                };
                (problem, OracleSpec::AnalyticBox, if paper { 256 } else { 128 })
            }
            ScenarioId::Heater => {
                let outer = Rect::new([0.0, 0.0], [10.0, 10.0]);
                let domain = Domain::RectMinusPolygon {
                    outer,
                    hole: heater_triangle().to_vec(),
                };
                let mut segments = box_edges(outer, 0.0, 0.0);
                segments.extend(
                    polygon_edges(&heater_triangle())
                        .into_iter()
                        .map(|e| BoundarySegment::dirichlet(e, 1.0)),
                );
                let problem = ProblemSpec {
                    decomposition: Some(heater_decomposition(&domain)?),
                    domain,
                    segments,
                    dielectric: None,
                };
                let oracle = OracleSpec::FdGrid {
                    cells: if paper { 512 } else { 256 },
                    permittivity: None,
                    singularities: Vec::new(),
                };
                (problem, oracle, if paper { 512 } else { 128 })
            }
            ScenarioId::Robot => {
                let segments = polygon_edges(&ROBOT_OUTLINE)
                    .into_iter()
                    .map(|e| match &e {
                        Primitive::Segment { a, b } if a[1] == 0.0 && b[1] == 0.0 => {
                            BoundarySegment::dirichlet(e, -1.0)
                        }
                        Primitive::Segment { a, b } if a[1] == 1.0 && b[1] == 1.0 => BoundarySegment::dirichlet(e, 1.0),
                        _ => BoundarySegment::neumann(e),
                    })
                    .collect();
                let problem = ProblemSpec {
                    domain: Domain::RectUnion {
                        rects: vec![Rect::new([0.0, 0.0], [0.5, 0.6]), Rect::new([0.5, 0.4], [1.0, 1.0])],
                    },
                    segments,
                    decomposition: None,
                    dielectric: None,
                };
                let oracle = OracleSpec::FdGrid {
                    cells: if paper { 320 } else { 160 },
                    permittivity: None,
                    singularities: Vec::new(),
                };
                (problem, oracle, 64)
            }
            ScenarioId::Pipe3d => {
                let segments = cube_faces(&[0.0; 3], &[1.0; 3])
                    .into_iter()
                    .enumerate()
                    .map(|(i, f)| BoundarySegment::dirichlet(f, [1.0, -1.0, 0.0, 0.0, 0.0, 0.0][i]))
                    .collect();
                let problem = ProblemSpec {
                    domain: Domain::Cube {
                        min: [0.0; 3],
                        max: [1.0; 3],
                    },
                    segments,
                    decomposition: None,
                    dielectric: None,
                };
                let oracle = OracleSpec::FdGrid {
                    cells: if paper { 64 } else { 32 },
                    permittivity: None,
                    singularities: pipe_edges(),
                };
                (problem, oracle, if paper { 48 } else { 24 })
            }
        };
        problem.domain.validate()?;
        Ok(Self {
            id,
            problem,
            oracle,
            eval_cells,
        })
    }

    /// Solves for the reference field. `cells` overrides the preset
    /// resolution of grid oracles.
    pub fn solve_oracle(&self, cells: Option<usize>) -> Result<Oracle> {
        match &self.oracle {
            OracleSpec::AnalyticBox => Ok(Oracle::AnalyticBox),
            OracleSpec::FdGrid {
                cells: preset,
                permittivity,
                singularities,
            } => {
                let n = cells.unwrap_or(*preset);
                let (lo, hi) = self.problem.domain.bounding_box();
                let extent = (0..lo.len()).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
                let mut fd = FdProblem::new(&self.problem.domain, &self.problem.segments, extent / n as f64)
                    .with_singularities(singularities.clone());
                if let Some(eps) = permittivity {
                    fd = fd.with_permittivity(*eps);
                }
                Ok(Oracle::Grid(fd_solve(fd)?.grid))
            }
        }
    }

    /// Cell centres of the `eval_cells`-per-axis grid over the bounding box.
    pub fn eval_lattice(&self) -> (Vec<f64>, f64, Vec<usize>) {
        let (lo, hi) = self.problem.domain.bounding_box();
        let extent = (0..lo.len()).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let h = extent / self.eval_cells as f64;
        let origin = lo.iter().map(|l| l + 0.5 * h).collect();
        let dims = (0..lo.len()).map(|k| ((hi[k] - lo[k]) / h).round() as usize).collect();
        (origin, h, dims)
    }

    /// Evaluation points: cell centres strictly inside the domain where the
    /// oracle is defined, in x-fastest order.
    pub fn eval_points(&self, oracle: &Oracle) -> Result<Vec<Vec<f64>>> {
        let (origin, h, dims) = self.eval_lattice();
        let grid = FieldGrid::new(origin, h, dims)?;
        let pts: Vec<Vec<f64>> = (0..grid.len())
            .map(|i| grid.node(i))
            .filter(|x| self.problem.domain.contains_strictly(x) && oracle.covers(x))
            .collect();
        if pts.is_empty() {
            return Err(BenchError::Config(format!(
                "scenario {} has no evaluation points",
                self.id
            )));
        }
        Ok(pts)
    }
}
