//! A single (scenario, method, seed) experiment and its output bundle.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use harmonia_core::geometry::SamplePlan;
use harmonia_core::losses::{assemble, build_network, check_compatible, BoundNetwork, Field, LossBundle, Objective};
use harmonia_core::nets::io as param_io;
use harmonia_core::oracle::{fmt17, metrics, FieldGrid, Metrics};
use harmonia_core::train::{train, TrainConfig, TrainReport};

use crate::config::{RunConfig, PLAN_SEED};
use crate::error::{BenchError, Result};
use crate::robot::{robot_path, RobotPath, DEFAULT_MAX_STEPS, DEFAULT_STEP};
use crate::scenario::{robot_starts, Oracle, Scenario, ScenarioId};

/// Outcome of one robot path launched on the trained field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub start: [f64; 2],
    pub path: Option<RobotPath>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: ScenarioId,
    pub method: harmonia_core::losses::Method,
    pub seed: u64,
    pub rmse: f64,
    pub paper_mae: f64,
    pub mean_abs_laplacian: f64,
    pub final_loss: LossBundle,
    pub initial_loss: f64,
    /// Largest value jump between neighbouring subnets at interface samples.
    pub interface_jump: Option<f64>,
    pub paths: Vec<PathRecord>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

/// The trained state of a run, for callers that need more than metrics.
pub struct Trained {
    pub scenario: Scenario,
    pub objective: Objective,
    pub report: TrainReport,
    pub oracle: Arc<Oracle>,
    pub eval_points: Vec<Vec<f64>>,
}

impl Trained {
    pub fn field(&self) -> BoundNetwork<'_> {
        BoundNetwork {
            net: &self.objective.network,
            params: &self.report.final_params,
        }
    }
}

type OracleKey = (ScenarioId, String);

fn oracle_cache() -> &'static Mutex<HashMap<OracleKey, Arc<Oracle>>> {
    static CACHE: OnceLock<Mutex<HashMap<OracleKey, Arc<Oracle>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The scenario's reference solution, solved once per process.
pub fn scenario_oracle(scenario: &Scenario, cells: Option<usize>) -> Result<Arc<Oracle>> {
    let key = (scenario.id, format!("{:?}/{cells:?}", scenario.oracle));
    if let Some(o) = oracle_cache().lock().expect("oracle cache").get(&key) {
        return Ok(o.clone());
    }
    let solved = Arc::new(scenario.solve_oracle(cells)?);
    oracle_cache().lock().expect("oracle cache").insert(key, solved.clone());
    Ok(solved)
}

/// Builds the samples and network, then trains.
pub fn train_run(cfg: &RunConfig) -> Result<Trained> {
    cfg.validate()?;
    let mut scenario = Scenario::build(cfg.scenario, cfg.preset)?;
    if let Some(n) = cfg.eval_cells {
        scenario.eval_cells = n;
    }
    let problem = &scenario.problem;
    check_compatible(cfg.method, problem)?;
    let decomposition = match problem.part_count(cfg.method) {
        1 => None,
        _ => problem.decomposition.as_ref(),
    };
    let plan = SamplePlan::build(
        &problem.domain,
        &problem.segments,
        decomposition,
        cfg.effective_boundary_points(),
        cfg.effective_interior_points(),
        PLAN_SEED,
    )?;
    let network = build_network(cfg.method, problem, &cfg.arch)?;
    let init = network.init(cfg.seed);
    let objective = assemble(cfg.method, problem, network, plan, cfg.weights)?;
    let tcfg = TrainConfig {
        epochs: cfg.effective_epochs(),
        lr: cfg.effective_lr(),
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let report = train(&objective, init, &tcfg)?;
    let oracle = scenario_oracle(&scenario, cfg.oracle_cells)?;
    let eval_points = scenario.eval_points(&oracle)?;
    Ok(Trained {
        scenario,
        objective,
        report,
        oracle,
        eval_points,
    })
}

/// Largest `|φᵢ − φⱼ|` over the interface samples of a piecewise network.
pub fn interface_jump(objective: &Objective, params: &[f64]) -> Result<Option<f64>> {
    let net = &objective.network;
    let Some(dec) = &net.partition else { return Ok(None) };
    let mut worst: f64 = 0.0;
    for (iface, samples) in dec.interfaces.iter().zip(&objective.plan.interfaces) {
        let (i, j) = iface.pair;
        for x in samples {
            let a = net.parts[i].eval_point(&params[net.part_range(i)], x)?.value;
            let b = net.parts[j].eval_point(&params[net.part_range(j)], x)?.value;
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Some(worst))
}

/// Robot paths from the default starts on the trained field.
pub fn launch_paths(field: &dyn Field, scenario: &Scenario) -> Vec<PathRecord> {
    let grad = |x: &[f64]| field.jet(x).map(|j| j.gradient().to_vec());
    robot_starts()
        .into_iter()
        .map(
            |start| match robot_path(&grad, &scenario.problem.domain, start, DEFAULT_STEP, DEFAULT_MAX_STEPS) {
                Ok(p) => PathRecord {
                    start,
                    path: Some(p),
                    error: None,
                },
                Err(e) => PathRecord {
                    start,
                    path: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect()
}

/// Trains, scores against the oracle and, with `out` set, writes the
/// output bundle into `out/<scenario>_<method>_seed<seed>/`.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunResult> {
    let start = Instant::now();
    let t = train_run(cfg)?;
    let field = t.field();
    let oracle = t.oracle.clone();
    let m: Metrics = metrics(&field, &|x| oracle.value(x), &t.eval_points)?;
    let params = &t.report.final_params;
    let paths = if cfg.scenario == ScenarioId::Robot {
        launch_paths(&field, &t.scenario)
    } else {
        Vec::new()
    };
    let mut result = RunResult {
        scenario: cfg.scenario,
        method: cfg.method,
        seed: cfg.seed,
        rmse: m.rmse,
        paper_mae: m.paper_mae,
        mean_abs_laplacian: m.mean_abs_laplacian,
        final_loss: t.objective.bundle(params)?,
        initial_loss: t.report.initial_loss,
        interface_jump: interface_jump(&t.objective, params)?,
        paths,
        wall_time_s: 0.0,
        files: Vec::new(),
    };
    if let Some(root) = out {
        let dir = root.join(run_dir_name(cfg));
        result.files = write_bundle(&dir, cfg, &t, &result)?;
    }
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

pub fn run_dir_name(cfg: &RunConfig) -> String {
    format!("{}_{}_seed{}", cfg.scenario, cfg.method, cfg.seed)
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|source| BenchError::File {
        path: path.display().to_string(),
        source,
    })?;
    Ok(std::io::BufWriter::new(f))
}

pub const METRICS_HEADER: [&str; 8] = [
    "scenario",
    "method",
    "seed",
    "epochs",
    "final_loss",
    "rmse",
    "paper_mae",
    "mean_abs_laplacian",
];

fn write_bundle(dir: &Path, cfg: &RunConfig, t: &Trained, r: &RunResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let dim = t.scenario.problem.dim();
    let axes = &["x", "y", "z"][..dim];

    let path = dir.join("config.json");
    let echo = serde_json::json!({
        "run": cfg,
        "scenario": t.scenario,
        "plan_seed": PLAN_SEED,
        "train": t.report.config,
        "eigenvalue_convention": "E_m = 2m + 1, phase exp(-(x + i y) pi H)",
    });
    fs::write(&path, serde_json::to_string_pretty(&echo)? + "\n")?;
    files.push(path);

    let path = dir.join("metrics.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(METRICS_HEADER)?;
    w.write_record([
        cfg.scenario.to_string(),
        cfg.method.to_string(),
        cfg.seed.to_string(),
        t.report.epochs_run.to_string(),
        fmt17(r.final_loss.total),
        fmt17(r.rmse),
        fmt17(r.paper_mae),
        fmt17(r.mean_abs_laplacian),
    ])?;
    w.flush()?;
    files.push(path);

    let field = t.field();
    let path = dir.join("field.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header: Vec<&str> = axes.to_vec();
    header.extend(["value", "oracle"]);
    w.write_record(&header)?;
    for x in &t.eval_points {
        let mut row: Vec<String> = x.iter().map(|v| fmt17(*v)).collect();
        row.push(fmt17(field.jet(x)?.value));
        row.push(fmt17(t.oracle.value(x)?));
        w.write_record(&row)?;
    }
    w.flush()?;
    files.push(path);

    let path = dir.join("fieldgrid.txt");
    let (origin, h, dims) = t.scenario.eval_lattice();
    let mut grid = FieldGrid::new(origin, h, dims)?;
    for idx in 0..grid.len() {
        let x = grid.node(idx);
        let inside = t.scenario.problem.domain.contains_strictly(&x) && t.oracle.covers(&x);
        grid.mask[idx] = inside;
        grid.values[idx] = if inside { field.jet(&x)?.value } else { f64::NAN };
    }
    fs::write(&path, grid.to_text())?;
    files.push(path);

    let path = dir.join("losstrace.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["epoch", "loss"])?;
    for e in &t.report.trace {
        w.write_record([e.epoch.to_string(), fmt17(e.loss)])?;
    }
    w.flush()?;
    files.push(path);

    let path = dir.join("params.hnet");
    param_io::save(&path, &t.objective.network, &t.report.final_params)?;
    files.push(path);

    if !r.paths.is_empty() {
        let path = dir.join("paths.csv");
        let mut out = create(&path)?;
        writeln!(out, "path,step,x,y,termination")?;
        for (k, rec) in r.paths.iter().enumerate() {
            match (&rec.path, &rec.error) {
                (Some(p), _) => {
                    let term = serde_json::to_value(p.termination)?;
                    for (s, q) in p.points.iter().enumerate() {
                        writeln!(
                            out,
                            "{k},{s},{},{},{}",
                            fmt17(q[0]),
                            fmt17(q[1]),
                            term.as_str().unwrap_or("")
                        )?;
                    }
                }
                (None, _) => {
                    writeln!(out, "{k},0,{},{},error", fmt17(rec.start[0]), fmt17(rec.start[1]))?;
                }
            }
        }
        out.flush()?;
        files.push(path);
    }
    Ok(files)
}
