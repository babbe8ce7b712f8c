//! Invariant suites run by `harmonia check` and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harmonia_core::diffcore::Differentiable;
use harmonia_core::geometry::SamplePlan;
use harmonia_core::losses::{assemble, build_network, check_compatible, ArchConfig, LossWeights, Method};
use harmonia_core::nets::{
    curl_field_with_divergence, potential_components, Activation, CurlPair, InputMap, MlpSpec, RealMlp,
};
use harmonia_core::oracle::{analytic_box, fd_solve, CornerSingularity, FdProblem};
use harmonia_core::qsim::{qholo_derivatives, QHoloNet};
use harmonia_core::train::{train, TrainConfig};

use crate::error::Result;
use crate::scenario::{Preset, Scenario, ScenarioId};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn unit_points(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Largest `|∇²φ|` of random holomorphic networks on the unit square,
/// before and after a short fit to the heated-box data.
pub fn holomorphic_laplacian(nets: usize, points: usize, fit_epochs: usize, seed: u64) -> Result<(f64, f64)> {
    let scenario = Scenario::build(ScenarioId::HeatBox, Preset::Fast)?;
    let problem = &scenario.problem;
    let plan = SamplePlan::build(&problem.domain, &problem.segments, None, 25, 1, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = unit_points(points, 2, &mut rng);
    let (mut before, mut after): (f64, f64) = (0.0, 0.0);
    for k in 0..nets {
        let network = build_network(Method::Holomorphic, problem, &ArchConfig::default())?;
        let init = network.init(seed.wrapping_add(k as u64));
        let obj = assemble(
            Method::Holomorphic,
            problem,
            network,
            plan.clone(),
            LossWeights::default(),
        )?;
        let worst = |params: &[f64]| -> Result<f64> {
            let mut m: f64 = 0.0;
            for x in &pts {
                m = m.max(obj.network.eval_point(params, x)?.laplacian().abs());
            }
            Ok(m)
        };
        before = before.max(worst(&init)?);
        let cfg = TrainConfig {
            epochs: fit_epochs,
            seed,
            ..TrainConfig::default()
        };
        let report = train(&obj, init, &cfg)?;
        after = after.max(worst(&report.final_params)?);
    }
    Ok((before, after))
}

/// Largest quantum Laplacian and largest circuit-vs-spectrum discrepancy
/// over random angle settings.
pub fn quantum_harmonicity(settings: usize, points: usize, seed: u64) -> Result<(f64, f64)> {
    let net = QHoloNet::new(4, 4, InputMap::identity(2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lap, mut gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..settings {
        let params: Vec<f64> = (0..net.param_count())
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let spectrum = net.spectrum(&params)?;
        for _ in 0..points {
            let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
            lap = lap.max(qholo_derivatives(&net, &params, x, y)?.laplacian.abs());
            let direct = net.eval_circuit(&params, x, y)?;
            gap = gap.max((direct - spectrum.eval(x, y).0.re).abs());
        }
    }
    Ok((lap, gap))
}

/// Largest `|∇·(∇×A)|` of random potentials in 2, 3 and 4 dimensions.
pub fn curl_divergence(points: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for dim in 2..=4 {
        let real = |outputs: usize| {
            RealMlp::new(
                MlpSpec::new(dim, outputs, Activation::Tanh).with_shape(3, 16),
                InputMap::identity(dim),
            )
        };
        let pair = CurlPair::new(real(1)?, real(potential_components(dim)?)?)?;
        let params = pair.init(seed + dim as u64);
        let mut worst: f64 = 0.0;
        for x in unit_points(points, dim, &mut rng) {
            worst = worst.max(curl_field_with_divergence(&pair, &params, &x)?.1.abs());
        }
        out.push((dim, worst));
    }
    Ok(out)
}

/// Worst relative mismatch between exact parameter gradients and central
/// differences, over every compatible (scenario, method) pair with width-8
/// networks. Returns `(worst, pairs checked)`.
pub fn gradient_agreement(seed: u64) -> Result<(f64, Vec<String>)> {
    let arch = ArchConfig {
        width: 8,
        qdepth: 2,
        ..ArchConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut checked = Vec::new();
    for id in ScenarioId::ALL {
        let scenario = Scenario::build(id, Preset::Fast)?;
        let problem = &scenario.problem;
        for method in Method::ALL {
            if check_compatible(method, problem).is_err() {
                continue;
            }
            let dec = (problem.part_count(method) > 1)
                .then_some(problem.decomposition.as_ref())
                .flatten();
            let plan = SamplePlan::build(&problem.domain, &problem.segments, dec, 3, 8, 1)?;
            let network = build_network(method, problem, &arch)?;
            let params = network.init(seed);
            let obj = assemble(method, problem, network, plan, LossWeights::default())?;
            let (_, grad) = obj.loss_and_grad(&params)?;
            let h = 1e-6;
            let mut probe = params.clone();
            for i in 0..params.len() {
                probe[i] = params[i] + h;
                let up = obj.loss(&probe)?;
                probe[i] = params[i] - h;
                let down = obj.loss(&probe)?;
                probe[i] = params[i];
                let fd = (up - down) / (2.0 * h);
                if fd.abs() > 1e-6 {
                    worst = worst.max(((grad[i] - fd) / fd).abs());
                }
            }
            checked.push(format!("{id}/{method}"));
        }
    }
    Ok((worst, checked))
}

/// Max error of the FD solver on the heated box against the closed form
/// (whose trace is imposed on `x = 1`), over nodes with `x ≥ 2h`.
pub fn box_oracle_error(cells: usize) -> Result<f64> {
    let scenario = Scenario::build(ScenarioId::HeatBox, Preset::Fast)?;
    let problem = &scenario.problem;
    let h = 1.0 / cells as f64;
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
    let fd = FdProblem::new(&problem.domain, &problem.segments, h)
        .with_tol(1e-10)
        .with_singularities(corners)
        .with_boundary_values(|x| (x[0] == 1.0).then(|| analytic_box(x[0], x[1])));
    let grid = fd_solve(fd)?.grid;
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let m = grid.multi_index(idx);
        if m[0] >= 2 && m[0] < cells && m[1] > 0 && m[1] < cells {
            let x = grid.node(idx);
            worst = worst.max((grid.values[idx] - analytic_box(x[0], x[1])).abs());
        }
    }
    Ok(worst)
}

/// The quick invariant suite behind `harmonia check`.
pub fn quick_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let (before, after) = holomorphic_laplacian(4, 200, 100, 0)?;
    out.push(CheckOutcome::new(
        "holomorphic harmonicity",
        before < 1e-8 && after < 1e-8,
        format!("max |lap| {before:.2e} before, {after:.2e} after fitting"),
    ));
    let (lap, gap) = quantum_harmonicity(5, 50, 0)?;
    out.push(CheckOutcome::new(
        "quantum harmonicity",
        lap < 1e-8 && gap < 1e-10,
        format!("max |lap| {lap:.2e}, circuit vs spectrum {gap:.2e}"),
    ));
    let div = curl_divergence(50, 0)?;
    out.push(CheckOutcome::new(
        "divergence-free curl",
        div.iter().all(|d| d.1 < 1e-8),
        div.iter()
            .map(|(d, v)| format!("N={d}: {v:.2e}"))
            .collect::<Vec<_>>()
            .join(", "),
    ));
    let (worst, pairs) = gradient_agreement(0)?;
    out.push(CheckOutcome::new(
        "parameter gradients",
        worst < 1e-4,
        format!("worst relative error {worst:.2e} over {} pairs", pairs.len()),
    ));
    let (coarse, fine) = (box_oracle_error(32)?, box_oracle_error(64)?);
    out.push(CheckOutcome::new(
        "finite-difference oracle",
        fine < 5e-3 && coarse / fine >= 3.0,
        format!("max error {coarse:.2e} at h=1/32, {fine:.2e} at h=1/64"),
    ));
    Ok(out)
}
