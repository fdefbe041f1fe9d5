use std::f64::consts::PI;

use darboux_core::catalog::{Elastic, ExampleId, ExampleModel};
use darboux_core::darboux::{
    compute_m_h, darboux_density, darboux_transform, doob_kernel, factorization_residuals, intertwine_residual,
    inverse_doob_kernel, krein_dual_check, siegmund_identity_check, siegmund_increment, verify_lambda_invariance,
    SeedFunction,
};
use darboux_core::diffusion::{BoundaryCondition, DiffusionSpec};
use darboux_core::kernel::{Provenance, TransitionKernel};
use darboux_core::math::special::heat_kernel;
use darboux_core::math::{linspace, Interval, ScalarField};
use darboux_core::Error;

fn model(id: ExampleId) -> ExampleModel {
    ExampleModel::new(id).unwrap()
}

fn reflected_bm() -> TransitionKernel {
    let half = Interval::positive_half_line();
    let spec = DiffusionSpec::killed_bm(
        half,
        ScalarField::constant(half, 0.0),
        BoundaryCondition::Reflecting,
        BoundaryCondition::NotApplicable,
    )
    .unwrap();
    TransitionKernel::new(spec, Provenance::ClosedForm, |t, x, y| {
        heat_kernel(t, x, y) + heat_kernel(t, x, -y)
    })
}

fn identity_seed() -> SeedFunction {
    SeedFunction::new(
        ScalarField::new(Interval::positive_half_line(), |y| y).with_derivative(|_| 1.0),
        0.0,
    )
}

#[test]
fn linear_seed_gives_a_negative_density() {
    let v = darboux_density(&reflected_bm(), &identity_seed(), 0.0, 1.0, 1.0, 0.05).unwrap();
    assert!(v < 0.0, "{v}");
}

#[test]
fn linear_seed_is_not_invariant_for_reflected_bm() {
    for (t, x) in [(0.5, 1.0), (1.0, 1.0), (0.5, 0.4)] {
        let r = verify_lambda_invariance(&reflected_bm(), &identity_seed(), t, x, 1e-6).unwrap();
        assert!(!r.pass && r.residual > 1e-2, "{r:?}");
    }
}

#[test]
fn shift_for_catalog_seeds() {
    let grid = |m: &ExampleModel| m.spec_y.interval.probe_grid(201, 1e-3, 12.0);
    let e1 = model(ExampleId::E1);
    assert!(compute_m_h(&e1.spec_y, &e1.seed, &grid(&e1)).unwrap().value.abs() < 1e-12);
    let e5 = model(ExampleId::E5);
    assert!(compute_m_h(&e5.spec_y, &e5.seed, &grid(&e5)).unwrap().value.abs() < 1e-12);
    // Literal suprema below the stored shift of zero.
    let e2 = model(ExampleId::E2);
    let s2 = compute_m_h(&e2.spec_y, &e2.seed, &grid(&e2)).unwrap().value;
    assert!((s2 + 1.0).abs() < 1e-9, "{s2}");
    let e3 = model(ExampleId::E3 { gamma: 0.5 });
    let a = Elastic::new(0.5).alpha().unwrap();
    let s3 = compute_m_h(&e3.spec_y, &e3.seed, &grid(&e3)).unwrap().value;
    assert!((s3 + a.tanh().powi(2)).abs() < 1e-6, "{s3}");
}

fn dual_pair(m: &ExampleModel) -> (TransitionKernel, TransitionKernel) {
    let x = doob_kernel(&m.p_y, &m.seed).unwrap();
    let xt = inverse_doob_kernel(&m.p_ytilde, &m.seed, m.m_h).unwrap();
    (x, xt)
}

#[test]
fn duality_constancy_on_the_line() {
    let m = model(ExampleId::E1);
    let (x, xt) = dual_pair(&m);
    let grid = linspace(-2.0, 2.0, 9);
    let dev = siegmund_identity_check(&x, &xt, 0.5, 0.3, &grid).unwrap();
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn duality_constancy_on_the_unit_interval() {
    let m = model(ExampleId::E4);
    let (x, xt) = dual_pair(&m);
    let grid = linspace(0.1, 0.9, 9);
    let dev = siegmund_identity_check(&x, &xt, 0.2, 0.5, &grid).unwrap();
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn duality_increment_identity() {
    let m = model(ExampleId::E1);
    let (x, xt) = dual_pair(&m);
    let (t, y, x1, x2) = (0.5, 0.3, -0.4, 0.9);
    let below = |x0: f64| {
        x.integrate_against(t, x0, f64::NEG_INFINITY, y, |_| 1.0, 1e-12)
            .unwrap()
    };
    let inc = siegmund_increment(&xt, t, y, x1, x2).unwrap();
    assert!((below(x1) - below(x2) - inc).abs() < 1e-8);
}

#[test]
fn intertwining_on_the_line_and_interval() {
    let e1 = model(ExampleId::E1);
    let mu = 0.7_f64;
    let z = (2.0 * (1.0 + mu)).sqrt();
    let f = ScalarField::new(Interval::real_line(), move |y| (z * y).exp()).with_derivative(move |y| z * (z * y).exp());
    for x in [-1.5, 0.0, 0.8] {
        assert!(intertwine_residual(&e1.spec_y, &e1.seed, 0.0, &f, mu, x).unwrap() < 1e-6);
    }
    assert!(intertwine_residual(&e1.spec_y, &e1.seed, 0.0, &e1.seed.h, -0.5, 0.3).unwrap() < 1e-12);

    let e4 = model(ExampleId::E4);
    let sin3 = ScalarField::new(Interval::unit(), |x: f64| (3.0 * PI * x).sin())
        .with_derivative(|x: f64| 3.0 * PI * (3.0 * PI * x).cos());
    let mu = -3.5 * PI * PI;
    for x in [0.2, 0.45, 0.7] {
        let r = intertwine_residual(&e4.spec_y, &e4.seed, 0.0, &sin3, mu, x).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}

#[test]
fn factorization_for_every_seed() {
    for id in ExampleId::all() {
        let m = model(id);
        let dom = m.spec_y.interval;
        let f = ScalarField::new(dom, |y: f64| (1.3 * y).sin() + y * y)
            .with_derivative(|y: f64| 1.3 * (1.3 * y).cos() + 2.0 * y);
        let g =
            ScalarField::new(dom, |y: f64| (-0.5 * y * y).exp()).with_derivative(|y: f64| -y * (-0.5 * y * y).exp());
        let pts = if dom.is_bounded() {
            vec![0.3, 0.5, 0.8]
        } else if dom.left == 0.0 {
            vec![0.4, 1.0, 2.5]
        } else {
            vec![-1.0, 0.2, 1.7]
        };
        for x in pts {
            let r = factorization_residuals(&m.spec_y, &m.seed, m.m_h, &f, &g, x).unwrap();
            assert!(r.first < 1e-6 && r.second < 1e-6, "{id} at {x}: {r:?}");
        }
    }
}

#[test]
fn krein_strings() {
    let e1 = model(ExampleId::E1);
    assert!(krein_dual_check(&e1.seed, &linspace(-2.0, 2.0, 9)).unwrap() < 1e-8);
    let e2 = model(ExampleId::E2);
    assert!(krein_dual_check(&e2.seed, &linspace(0.1, 3.0, 9)).unwrap() < 1e-8);
}

#[test]
fn reciprocal_seed_is_not_invariant_for_the_elastic_transform() {
    for gamma in [0.5, 3.0] {
        let m = model(ExampleId::E3 { gamma });
        let el = Elastic::new(gamma);
        let inv = ScalarField::new(Interval::positive_half_line(), move |y| 1.0 / el.h(y))
            .with_derivative(move |y| -el.dh(y) / el.h(y).powi(2));
        let seed = SeedFunction::new(inv, -(m.m_h + m.seed.lambda));
        let r = verify_lambda_invariance(&m.p_ytilde, &seed, 1.0, 0.5, 1e-6).unwrap();
        assert!(!r.pass, "gamma {gamma}: {r:?}");
    }
}

#[test]
fn transform_records_boundary_flip() {
    let m = model(ExampleId::E3 { gamma: 3.0 });
    let res = darboux_transform(&m.p_y, &m.seed, 0.0).unwrap();
    assert_eq!(res.spec_ytilde.left_bc, BoundaryCondition::Killing);
    assert!(!res.notes.is_empty());
    let e2 = model(ExampleId::E2);
    let res2 = darboux_transform(&e2.p_y, &e2.seed, 0.0).unwrap();
    assert_eq!(res2.spec_ytilde.left_bc, BoundaryCondition::NotApplicable);
    // Negative shift below the literal supremum is rejected.
    assert!(matches!(
        darboux_transform(&e2.p_y, &e2.seed, -2.0),
        Err(Error::NegativeRate { .. })
    ));
}

#[test]
fn elastic_transform_kills_at_zero() {
    for gamma in [0.5, 1.0, 3.0] {
        let m = model(ExampleId::E3 { gamma });
        let vals: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&y| m.pytilde_eval(0.5, 0.8, y))
            .collect();
        assert!(vals.windows(2).all(|w| w[1].abs() < w[0].abs()), "{vals:?}");
        assert!(vals[3].abs() < 1e-3);
        let built = darboux_density(&m.p_y, &m.seed, 0.0, 0.5, 0.8, 1e-3).unwrap();
        assert!(built.abs() < 1e-2);
    }
}

#[test]
fn quadrature_built_kernel_is_a_semigroup() {
    let m = model(ExampleId::E1);
    let res = darboux_transform(&m.p_y, &m.seed, 0.0).unwrap();
    let r = res
        .kernel_ytilde
        .chapman_kolmogorov_residual(0.3, 0.4, 0.2, -0.3)
        .unwrap();
    assert!(r < 1e-4, "{r}");
    let v = res.kernel_ytilde.eval(0.7, 0.2, -0.3);
    assert!((v - m.pytilde_eval(0.7, 0.2, -0.3)).abs() < 1e-6);
}
