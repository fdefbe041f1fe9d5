use darboux_core::catalog::{ExampleId, ExampleModel};
use darboux_core::diffusion::{BoundaryCondition, DiffusionSpec};
use darboux_core::math::{linspace, Interval, Quadrature, ScalarField};
use darboux_core::montecarlo::{
    corollary52_check, excessive_check, mc_density_error, simulate_paths, survival_fraction, xtilde_spec, SimConfig,
    SimOutcome,
};
use darboux_core::Error;

fn model(id: ExampleId) -> ExampleModel {
    ExampleModel::new(id).unwrap()
}

fn none() -> BoundaryCondition {
    BoundaryCondition::NotApplicable
}

#[test]
fn transformed_line_kernel_matches_histogram() {
    let m = model(ExampleId::E1);
    let cfg = SimConfig::new(1e-3, 40_000, 21).unwrap();
    let (t, x0) = (0.5, 0.3);
    let out = simulate_paths(&m.p_ytilde.spec, x0, t, &cfg).unwrap();
    let cmp = mc_density_error(&out, &m.p_ytilde, t, x0, &linspace(-1.5, 2.1, 21)).unwrap();
    assert_eq!(cmp.bins.len(), 20);
    assert!(cmp.all_within(4.0), "{cmp:?}");
}

#[test]
fn transformed_half_line_kernel_matches_histogram() {
    let m = model(ExampleId::E2);
    let cfg = SimConfig::new(1e-3, 40_000, 22).unwrap();
    let (t, x0) = (0.5, 1.0);
    let out = simulate_paths(&m.p_ytilde.spec, x0, t, &cfg).unwrap();
    let cmp = mc_density_error(&out, &m.p_ytilde, t, x0, &linspace(0.05, 2.8, 21)).unwrap();
    assert!(cmp.all_within(4.0), "{cmp:?}");
}

#[test]
fn elastic_reflection_matches_closed_form() {
    for gamma in [0.5, 3.0] {
        let m = model(ExampleId::E3 { gamma });
        let cfg = SimConfig::new(1e-3, 40_000, 5).unwrap();
        let (t, x0) = (0.6, 0.4);
        let out = simulate_paths(&m.spec_y, x0, t, &cfg).unwrap();
        let cmp = mc_density_error(&out, &m.p_y, t, x0, &linspace(0.0, 2.2, 12)).unwrap();
        assert!(cmp.all_within(4.0), "gamma {gamma}: {cmp:?}");
        let mass = m.p_y.mass(t, x0).unwrap();
        let se = (mass * (1.0 - mass) / out.len() as f64).sqrt();
        assert!((survival_fraction(&out) - mass).abs() < 4.0 * se);
    }
}

#[test]
fn survival_converges_under_refinement() {
    let m = model(ExampleId::E2);
    let (t, x0) = (0.4, 0.5);
    let exact = m.p_ytilde.mass(t, x0).unwrap();
    let mut errs = Vec::new();
    for dt in [2e-2, 1e-3] {
        let out = simulate_paths(&m.p_ytilde.spec, x0, t, &SimConfig::new(dt, 40_000, 9).unwrap()).unwrap();
        errs.push((survival_fraction(&out) - exact).abs());
    }
    let se = (exact * (1.0 - exact) / 40_000.0).sqrt();
    assert!(errs[1] < 4.0 * se, "{errs:?}");
    assert!(errs[1] < errs[0], "{errs:?}");
}

#[test]
fn doob_process_on_the_line_never_dies() {
    let m = model(ExampleId::E1);
    let line = Interval::real_line();
    let s = m.seed.clone();
    let spec = DiffusionSpec::new(
        line,
        ScalarField::new(line, move |x| s.log_derivative(x)),
        ScalarField::constant(line, 1.0),
        ScalarField::constant(line, 0.0),
        none(),
        none(),
        0.5,
    )
    .unwrap();
    let out = simulate_paths(&spec, 0.2, 1.0, &SimConfig::new(1e-2, 100_000, 1).unwrap()).unwrap();
    assert!(out.iter().all(SimOutcome::alive));
}

#[test]
fn excessive_bound_holds() {
    let cfg = SimConfig::new(1e-3, 20_000, 13).unwrap();
    let e1 = model(ExampleId::E1);
    let spec = xtilde_spec(&e1.seed, none(), none()).unwrap();
    let r = excessive_check(&e1.seed, e1.m_h, &spec, 0.4, 1.0, &cfg).unwrap();
    assert!(r.pass, "{r:?}");
    // Exact value is e^{λt} h(x) times the survival probability of the
    // transformed process.
    let exact = (0.5_f64).exp() * 0.4_f64.cosh() * e1.p_ytilde.mass(1.0, 0.4).unwrap();
    assert!((r.estimate - exact).abs() < 4.0 * r.std_err, "{r:?} vs {exact}");

    let e2 = model(ExampleId::E2);
    let spec = xtilde_spec(&e2.seed, none(), none()).unwrap();
    let r = excessive_check(&e2.seed, e2.m_h, &spec, 1.0, 0.5, &cfg).unwrap();
    assert!(r.pass, "{r:?}");

    let r0 = excessive_check(&e1.seed, e1.m_h, &spec_for(&e1), 0.4, 0.0, &cfg).unwrap();
    assert_eq!(r0.estimate, r0.bound);
    assert!(r0.pass);
}

fn spec_for(m: &ExampleModel) -> DiffusionSpec {
    xtilde_spec(&m.seed, none(), none()).unwrap()
}

#[test]
fn killed_bm_identity_for_elastic_parameters() {
    let cfg = SimConfig::new(1e-3, 40_000, 17).unwrap();
    for (gamma, t, x, y) in [(0.5, 0.5, 1.0, 1.5), (3.0, 0.4, 1.2, 2.0)] {
        let r = corollary52_check(gamma, t, x, y, &cfg).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.quadrature > 0.05);
    }
    assert!(corollary52_check(1.0, 0.5, 1.0, 1.5, &cfg).is_err());
}

#[test]
fn identity_quadrature_side_uses_the_shifted_kernel() {
    // Independent of the simulator: integrate the transformed elastic kernel
    // directly and compare with what the check reports.
    let cfg = SimConfig::new(1e-2, 2_000, 1).unwrap();
    let r = corollary52_check(0.5, 0.5, 1.0, 1.5, &cfg).unwrap();
    let m = model(ExampleId::E3 { gamma: 0.5 });
    let a = r.alpha;
    let q = Quadrature::with_tol(1e-11)
        .integrate(|u| m.pytilde_eval(0.5, 1.0 - a, u), 0.0, 1.5 - a)
        .unwrap()
        .value;
    assert!((q - r.quadrature).abs() < 1e-10);
    assert!((a - 0.5 * 3.0_f64.ln()).abs() < 1e-15);
}

#[test]
fn few_paths_are_rejected() {
    let m = model(ExampleId::E1);
    let out = simulate_paths(&m.p_ytilde.spec, 0.0, 0.5, &SimConfig::new(1e-2, 10, 1).unwrap()).unwrap();
    let err = mc_density_error(&out, &m.p_ytilde, 0.5, 0.0, &linspace(-1.0, 1.0, 5)).unwrap_err();
    assert!(matches!(err, Error::TooFewSurvivors { alive, .. } if alive <= 10));
}

#[test]
fn large_steps_are_flagged() {
    let line = Interval::real_line();
    let spec = DiffusionSpec::new(
        line,
        ScalarField::constant(line, 1e3),
        ScalarField::constant(line, 1.0),
        ScalarField::constant(line, 0.0),
        none(),
        none(),
        0.5,
    )
    .unwrap();
    let err = simulate_paths(&spec, 0.0, 0.1, &SimConfig::new(1e-3, 50, 1).unwrap()).unwrap_err();
    assert!(matches!(err, Error::StepTooLarge { .. }));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = model(ExampleId::E2);
    let cfg = SimConfig::new(1e-2, 3_000, 99).unwrap();
    let a = simulate_paths(&m.p_ytilde.spec, 0.7, 0.5, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| simulate_paths(&m.p_ytilde.spec, 0.7, 0.5, &cfg).unwrap());
    assert_eq!(a, b);
}
