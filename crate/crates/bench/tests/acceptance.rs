//! Acceptance criteria 1–11. Prints one PASS/FAIL line per criterion.
//! Failures only turn into a non-zero exit when `HARMONIA_ACCEPTANCE_STRICT`
//! is set, so the workspace test run reports them without aborting.

use std::time::Instant;

use harmonia_bench::checks::{
    box_oracle_error, curl_divergence, gradient_agreement, holomorphic_laplacian, quantum_harmonicity,
};
use harmonia_bench::{run, train_run, Preset, RunConfig, RunResult, Scenario, ScenarioId};
use harmonia_core::geometry::SamplePlan;
use harmonia_core::losses::{ArchConfig, Field, Method};
use harmonia_core::oracle::analytic_box;
use harmonia_core::qsim::train_qholo;

const HARMONIC_TOL: f64 = 1e-8;
const SPECTRAL_TOL: f64 = 1e-10;
const GRAD_REL_TOL: f64 = 1e-4;
const ORACLE_MAX_ERR: f64 = 5e-3;
const ORACLE_REFINE_FACTOR: f64 = 3.0;
const BOX_RMSE: f64 = 0.1;
const QHOLO_DROP: f64 = 0.3;
const PINN_MIN_LAPLACIAN: f64 = 1e-4;
const HEATER_FACTOR: f64 = 10.0;
const INTERFACE_JUMP: f64 = 0.02;
const ROBOT_GOAL_Y: f64 = 0.98;
const SEEDS: [u64; 3] = [0, 1, 2];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

/// Runtime limit per criterion, in seconds.
fn budget(n: usize) -> Option<f64> {
    match n {
        1..=3 => Some(60.0),
        4 | 5 => Some(120.0),
        6 => Some(600.0),
        7 | 9 | 10 => Some(1800.0),
        8 => Some(2700.0),
        _ => None,
    }
}

fn runs(scenario: ScenarioId, method: Method) -> Vec<RunResult> {
    SEEDS
        .iter()
        .map(|&seed| {
            run(&RunConfig::new(scenario, method, seed, Preset::Fast), None)
                .unwrap_or_else(|e| panic!("{scenario}/{method}/seed{seed}: {e}"))
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_1() -> Verdict {
    let (before, after) = holomorphic_laplacian(20, 1000, 500, 11).expect("holomorphic suite");
    verdict(
        before < HARMONIC_TOL && after < HARMONIC_TOL,
        format!("max |lap| over 20 nets x 1000 points: {before:.2e} at init, {after:.2e} after 500 epochs"),
    )
}

fn criterion_2() -> Verdict {
    let (lap, gap) = quantum_harmonicity(20, 100, 12).expect("quantum suite");
    verdict(
        lap < HARMONIC_TOL && gap < SPECTRAL_TOL,
        format!("max |lap| {lap:.2e}, max |circuit - spectral| {gap:.2e}"),
    )
}

fn criterion_3() -> Verdict {
    let div = curl_divergence(100, 13).expect("curl suite");
    let worst = div.iter().map(|d| d.1).fold(0.0, f64::max);
    verdict(
        worst < HARMONIC_TOL,
        div.iter()
            .map(|(d, v)| format!("N={d}: {v:.2e}"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn criterion_4() -> Verdict {
    let (worst, pairs) = gradient_agreement(14).expect("gradient suite");
    verdict(
        worst < GRAD_REL_TOL && !pairs.is_empty(),
        format!(
            "worst relative error {worst:.2e} over {} method/scenario pairs",
            pairs.len()
        ),
    )
}

fn criterion_5() -> Verdict {
    let coarse = box_oracle_error(128).expect("129x129 solve");
    let fine = box_oracle_error(256).expect("257x257 solve");
    let factor = coarse / fine;
    verdict(
        fine < ORACLE_MAX_ERR && factor >= ORACLE_REFINE_FACTOR,
        format!("max error {fine:.2e} at 257x257, {coarse:.2e} at 129x129 (factor {factor:.2})"),
    )
}

/// RMSE against the closed form over a 100x100 cell-centred grid, `x ≥ 0.1`.
fn box_rmse(field: &dyn Field) -> f64 {
    let mut sq = 0.0;
    let mut n = 0;
    for i in 0..100 {
        for j in 0..100 {
            let x = [(i as f64 + 0.5) / 100.0, (j as f64 + 0.5) / 100.0];
            if x[0] < 0.1 {
                continue;
            }
            let v = field.jet(&x).expect("field evaluates").value;
            sq += (v - analytic_box(x[0], x[1])).powi(2);
            n += 1;
        }
    }
    (sq / n as f64).sqrt()
}

fn criterion_6() -> Verdict {
    let scenario = Scenario::build(ScenarioId::HeatBox, Preset::Fast).expect("scenario");
    let p = &scenario.problem;
    let plan = SamplePlan::build(&p.domain, &p.segments, None, 100, 1024, 0).expect("plan");
    let fit = train_qholo(p, &ArchConfig::default(), plan, 300, 0).expect("quantum fit");
    let at_100 = fit
        .report
        .trace
        .iter()
        .find(|e| e.epoch == 100)
        .map(|e| e.loss)
        .expect("epoch 100 traced");
    let drop = at_100 / fit.report.initial_loss;
    let q_rmse = box_rmse(&harmonia_core::losses::BoundNetwork {
        net: &fit.network,
        params: &fit.report.final_params,
    });

    let mut cfg = RunConfig::new(ScenarioId::HeatBox, Method::Holomorphic, 0, Preset::Fast);
    cfg.epochs = Some(2000);
    let classical = train_run(&cfg).expect("classical fit");
    let c_rmse = box_rmse(&classical.field());
    verdict(
        q_rmse < BOX_RMSE && c_rmse < BOX_RMSE && drop < QHOLO_DROP,
        format!(
            "qHolomorphic rmse {q_rmse:.4}, Dirichlet loss at epoch 100 = {:.1}% of initial; holomorphic rmse {c_rmse:.4}",
            100.0 * drop
        ),
    )
}

fn criterion_7() -> (Verdict, Vec<RunResult>) {
    let holo = runs(ScenarioId::Electrostatics, Method::Holomorphic);
    let curl = runs(ScenarioId::Electrostatics, Method::CurlNet);
    let pinn = runs(ScenarioId::Electrostatics, Method::Pinn);
    let (h, c, p) = (
        mean(holo.iter().map(|r| r.rmse)),
        mean(curl.iter().map(|r| r.rmse)),
        mean(pinn.iter().map(|r| r.rmse)),
    );
    let h_lap = holo.iter().map(|r| r.mean_abs_laplacian).fold(0.0, f64::max);
    let p_lap = mean(pinn.iter().map(|r| r.mean_abs_laplacian));
    (
        verdict(
            h < c && c < p && h_lap < HARMONIC_TOL && p_lap > PINN_MIN_LAPLACIAN,
            format!(
                "mean rmse x100: Holomorphic {:.2} < CurlNet {:.2} < PINN {:.2}; E|lap| Holomorphic {h_lap:.1e}, PINN {p_lap:.1e}",
                100.0 * h,
                100.0 * c,
                100.0 * p
            ),
        ),
        holo,
    )
}

fn criterion_8() -> Verdict {
    let holo = runs(ScenarioId::Heater, Method::Holomorphic);
    let multi = runs(ScenarioId::Heater, Method::Multiholomorphic);
    let (h, m) = (mean(holo.iter().map(|r| r.rmse)), mean(multi.iter().map(|r| r.rmse)));
    let jump = multi
        .iter()
        .map(|r| r.interface_jump.expect("piecewise net"))
        .fold(0.0, f64::max);
    verdict(
        h >= HEATER_FACTOR * m && jump < INTERFACE_JUMP,
        format!(
            "mean rmse x100: Holomorphic {:.2} vs Multiholomorphic {:.2} (factor {:.1}); max interface jump {jump:.2e}",
            100.0 * h,
            100.0 * m,
            h / m
        ),
    )
}

fn criterion_9() -> Verdict {
    let curl = runs(ScenarioId::Robot, Method::CurlNet);
    let holo = runs(ScenarioId::Robot, Method::Holomorphic);
    let pinn = runs(ScenarioId::Robot, Method::Pinn);
    let (c, h, p) = (
        mean(curl.iter().map(|r| r.rmse)),
        mean(holo.iter().map(|r| r.rmse)),
        mean(pinn.iter().map(|r| r.rmse)),
    );
    let mut launched = 0;
    let mut arrived = 0;
    let mut stationary = 0;
    for r in &holo {
        for rec in &r.paths {
            launched += 1;
            match &rec.path {
                Some(path) if path.end()[1] >= ROBOT_GOAL_Y => arrived += 1,
                Some(_) => {}
                None => stationary += 1,
            }
        }
    }
    verdict(
        c < h && h < p && launched > 0 && arrived == launched && stationary == 0,
        format!(
            "mean rmse x100: CurlNet {:.2}, Holomorphic {:.2}, PINN {:.2}; holomorphic paths reaching y >= {ROBOT_GOAL_Y}: {arrived}/{launched}, stationary {stationary}",
            100.0 * c,
            100.0 * h,
            100.0 * p
        ),
    )
}

fn criterion_10() -> Verdict {
    let curl = runs(ScenarioId::Pipe3d, Method::CurlNet);
    let pinn = runs(ScenarioId::Pipe3d, Method::Pinn);
    let (c, p) = (mean(curl.iter().map(|r| r.rmse)), mean(pinn.iter().map(|r| r.rmse)));
    verdict(
        c < p,
        format!("mean rmse x100: CurlNet {:.2} vs PINN {:.2}", 100.0 * c, 100.0 * p),
    )
}

fn criterion_11(reference: &RunResult) -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = RunConfig::new(reference.scenario, reference.method, reference.seed, Preset::Fast);
    let a = run(&cfg, Some(&dir.path().join("a"))).expect("first rerun");
    let b = run(&cfg, Some(&dir.path().join("b"))).expect("second rerun");
    let bytes = |r: &RunResult| {
        let f = r
            .files
            .iter()
            .find(|f| f.ends_with("metrics.csv"))
            .expect("metrics written");
        std::fs::read(f).expect("metrics readable")
    };
    let same_files = bytes(&a) == bytes(&b);
    let same_as_reference = a.rmse.to_bits() == reference.rmse.to_bits()
        && a.mean_abs_laplacian.to_bits() == reference.mean_abs_laplacian.to_bits();
    verdict(
        same_files && same_as_reference,
        format!(
            "{}/{}/seed{} rerun: metrics.csv bytes identical {same_files}, metrics bit-identical to the criterion-7 run {same_as_reference}",
            reference.scenario, reference.method, reference.seed
        ),
    )
}

fn main() {
    // Accept and ignore libtest flags such as `--nocapture`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: usize| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut results: Vec<(usize, Verdict)> = Vec::new();
    let mut report = |n: usize, mut v: Verdict, secs: f64| {
        match budget(n) {
            Some(limit) => {
                v.passed &= secs < limit;
                v.detail = format!("{}; {secs:.0}s of {limit:.0}s", v.detail);
            }
            None => v.detail = format!("{}; {secs:.0}s", v.detail),
        }
        println!(
            "criterion {n:>2}: {} {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((n, v));
    };
    let simple: [(usize, fn() -> Verdict); 6] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
    ];
    for (n, f) in simple {
        if wanted(n) {
            let t = Instant::now();
            let v = f();
            report(n, v, t.elapsed().as_secs_f64());
        }
    }
    if wanted(7) || wanted(11) {
        let t = Instant::now();
        let (v, holo) = criterion_7();
        if wanted(7) {
            report(7, v, t.elapsed().as_secs_f64());
        }
        if wanted(11) {
            let t = Instant::now();
            let v = criterion_11(&holo[0]);
            report(11, v, t.elapsed().as_secs_f64());
        }
    }
    let rest: [(usize, fn() -> Verdict); 3] = [(8, criterion_8), (9, criterion_9), (10, criterion_10)];
    for (n, f) in rest {
        if wanted(n) {
            let t = Instant::now();
            let v = f();
            report(n, v, t.elapsed().as_secs_f64());
        }
    }
    results.sort_by_key(|r| r.0);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        if std::env::var_os("HARMONIA_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
