use harmonia_bench::{robot_path, Oracle, Preset, Scenario, ScenarioId, Termination};

/// Central differences on the oracle grid, one-sided next to walls.
fn grid_gradient(oracle: &Oracle, h: f64, x: &[f64]) -> Vec<f64> {
    let v = |p: &[f64]| oracle.value(p).ok().filter(|v| v.is_finite());
    let here = v(x).expect("path points are covered by the oracle");
    (0..2)
        .map(|k| {
            let (mut up, mut down) = (x.to_vec(), x.to_vec());
            up[k] += h;
            down[k] -= h;
            match (v(&up), v(&down)) {
                (Some(a), Some(b)) => (a - b) / (2.0 * h),
                (Some(a), None) => (a - here) / h,
                (None, Some(b)) => (here - b) / h,
                (None, None) => 0.0,
            }
        })
        .collect()
}

#[test]
fn oracle_field_steers_every_start_through_the_passage() {
    let scenario = Scenario::build(ScenarioId::Robot, Preset::Fast).unwrap();
    let cells = 160;
    let oracle = scenario.solve_oracle(Some(cells)).unwrap();
    let h = 1.0 / cells as f64;
    let grad = |x: &[f64]| Ok(grid_gradient(&oracle, h, x));
    for start in harmonia_bench::scenario::robot_starts() {
        let path = robot_path(&grad, &scenario.problem.domain, start, 0.01, 10_000).unwrap();
        assert_eq!(path.termination, Termination::Reached, "from {start:?}");
        assert!(path.end()[1] >= 0.98);
        assert!(path.points.iter().all(|p| scenario.problem.domain.contains(p)));
        // The path has to pass through the opening between the two rooms.
        assert!(path.points.iter().any(|p| p[0] > 0.5 && p[1] < 0.6));
    }
}

#[test]
fn halving_the_step_keeps_the_oracle_endpoint() {
    let scenario = Scenario::build(ScenarioId::Robot, Preset::Fast).unwrap();
    let oracle = scenario.solve_oracle(Some(160)).unwrap();
    let grad = |x: &[f64]| Ok(grid_gradient(&oracle, 1.0 / 160.0, x));
    let a = robot_path(&grad, &scenario.problem.domain, [0.25, 0.05], 0.01, 10_000).unwrap();
    let b = robot_path(&grad, &scenario.problem.domain, [0.25, 0.05], 0.005, 10_000).unwrap();
    let (ea, eb) = (a.end(), b.end());
    assert!((ea[0] - eb[0]).hypot(ea[1] - eb[1]) < 2.0 * 0.01);
}
