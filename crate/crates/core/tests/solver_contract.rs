//! End-to-end flows driven by the bundled problem files: load, build the
//! energy, and run the same pipelines the command-line tool wires together.

use aniso_bvp::criteria::{
    check_multiplicity_conditions, criteria_report, CriteriaOptions, RadiiSource,
};
use aniso_bvp::energy::Classification;
use aniso_bvp::problem::load_problem;
use aniso_bvp::sequence::Sequence;
use aniso_bvp::solvers::{
    minimize_direct, mountain_pass, solve_deflated, sweep_lambda, SolverConfig,
};

const EXAMPLE_PATH: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../problems/paper-example.json"
);
const CUBIC_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../problems/cubic-t1.json");

#[test]
fn bundled_cubic_file_drives_deflation_and_the_pass() {
    let data = load_problem(CUBIC_PATH).unwrap();
    let spec = data.spec().unwrap();
    let cfg = SolverConfig::default();

    let set = solve_deflated(&spec, &cfg).unwrap();
    assert_eq!(set.points.len(), 3);
    let mut values: Vec<f64> = set.points.iter().map(|pt| pt.values[1]).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let root = 2f64.sqrt();
    for (got, want) in values.iter().zip([-root, 0.0, root]) {
        assert!((got - want).abs() < 1e-8, "root {got} vs {want}");
    }

    // J(x) = x^2 - x^4/4 on this problem: both endpoints of the path
    // 0 -> (2) sit at level zero and the barrier tops out at sqrt(2).
    let pass = mountain_pass(&spec, &cfg, &Sequence::from_interior(&[2.0]).unwrap()).unwrap();
    assert!((pass.energy - 1.0).abs() < 1e-6);
    assert!((pass.values[1].abs() - root).abs() < 1e-6);
    assert!(pass.residual_sup_norm < cfg.residual_tol);
}

#[test]
fn example_file_criteria_report_uses_the_file_radii() {
    let data = load_problem(EXAMPLE_PATH).unwrap();
    let radii = (data.r_prime.unwrap(), data.s_prime.unwrap());

    let options = CriteriaOptions {
        radii: Some(radii),
        ..CriteriaOptions::default()
    };
    let report = criteria_report(&data.p, &data.nonlinearity, &options).unwrap();

    let radii_report = report.radii.as_ref().expect("radii were supplied");
    assert!(matches!(radii_report.source, RadiiSource::Explicit));
    assert_eq!((radii_report.inner, radii_report.outer), radii);

    // The report's multiplicity block must be the same verdicts the direct
    // checker produces for the same annulus.
    let direct =
        check_multiplicity_conditions(&data.p, &data.nonlinearity, radii.0, radii.1).unwrap();
    let from_report = report
        .multiplicity
        .as_ref()
        .expect("radii imply conditions");
    assert_eq!(
        serde_json::to_value(from_report).unwrap(),
        serde_json::to_value(&direct).unwrap()
    );
    assert!(!direct.all_hold);
    assert!(direct.gap.holds);

    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["radii"]["source"], "explicit");
}

#[test]
fn sweeps_are_bit_reproducible_from_loaded_files() {
    let data = load_problem(EXAMPLE_PATH).unwrap();
    let grid = [8.0, 45.254833995939045, 64.0];
    let cfg = SolverConfig::default();

    let first = sweep_lambda(&data.p, &data.nonlinearity, &grid, &cfg).unwrap();
    let second = sweep_lambda(&data.p, &data.nonlinearity, &grid, &cfg).unwrap();
    assert_eq!(
        serde_json::to_value(&first).unwrap(),
        serde_json::to_value(&second).unwrap()
    );
    assert_eq!(first.rows[2].n_solutions, 3);
}

#[test]
fn minimizer_certifies_on_a_loaded_problem() {
    let data = load_problem(EXAMPLE_PATH).unwrap();
    let spec = data.spec_with_lambda(8.0).unwrap();
    let cfg = SolverConfig::default();

    let start = Sequence::from_interior(&[1.5, -0.7]).unwrap();
    let run = minimize_direct(&spec, &cfg, &start).unwrap();
    assert!(run.converged);
    assert!(run.point.residual_sup_norm < cfg.residual_tol);
    assert!(!matches!(
        run.point.classification,
        Classification::LocalMax
    ));
}
