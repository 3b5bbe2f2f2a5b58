use std::sync::Arc;

use pdge::dg_space::{transfer, DgSpace, DgVector};
use pdge::estimators::{
    accumulate, coarsening_indicator, data_indicator, elliptic_terms, nonconforming_indicators, operator_indicators,
    tensor_variation, time_indicator, Constants, EllipticSource, StepIndicators, StepInterval,
};
use pdge::geometry::Point;
use pdge::ipdg::{jump_seminorm, CoefficientBounds, DiffusionTensor};
use pdge::mesh::{build_structured_mesh, DomainTag, Mesh};
use pdge::quadrature::triangle_rule;
use pdge::Error;

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(build_structured_mesh(DomainTag::UnitSquare, n))
}

fn space(n: usize, p: usize) -> Arc<DgSpace> {
    DgSpace::new(mesh(n), p).unwrap()
}

/// Continuous, piecewise cubic on meshes with a line at y = 1/2, zero on the boundary.
fn hat(x: Point, _t: f64) -> f64 {
    x[0] * (1.0 - x[0]) * (1.0 - (2.0 * x[1] - 1.0).abs())
}

fn k() -> Constants {
    Constants::default()
}

#[test]
fn polynomial_residual_and_flux_vanish() {
    let s = space(2, 2);
    let z = DgVector::l2_project(&s, |x, _| x[0] * x[0] + x[0] * x[1] - 3.0 * x[1] * x[1], 0.0);
    let tensor = DiffusionTensor::identity();
    let bounds = CoefficientBounds::compute(&s, &tensor, 0.0);
    // −Δz = −(2 − 6) = 4
    let g = |_: Point| 4.0;
    let terms = elliptic_terms(&z, &tensor, &bounds, EllipticSource::Field(&g), 80.0);
    assert!(terms.residual < 1e-10, "{}", terms.residual);
    assert!(terms.flux < 1e-10, "{}", terms.flux);
}

#[test]
fn conforming_function_has_no_penalty_term() {
    let s = space(2, 3);
    let z = DgVector::l2_project(&s, hat, 0.0);
    let tensor = DiffusionTensor::identity();
    let bounds = CoefficientBounds::compute(&s, &tensor, 0.0);
    let g = |_: Point| 0.0;
    let terms = elliptic_terms(&z, &tensor, &bounds, EllipticSource::Field(&g), 160.0);
    assert!(terms.penalty < 1e-12, "{}", terms.penalty);
}

#[test]
fn estimator_scales_with_root_of_tensor_factor() {
    let s = space(3, 2);
    let z = DgVector::l2_project(&s, |x, _| (2.0 * x[0]).sin() * x[1] + x[0], 0.0);
    let g = |x: Point| x[0] - x[1] * x[1];
    let g4 = |x: Point| 4.0 * g(x);
    let e1 = pdge::estimators::elliptic_estimator(&z, &DiffusionTensor::identity(), 0.0, EllipticSource::Field(&g), 80.0, &k());
    let e4 = pdge::estimators::elliptic_estimator(&z, &DiffusionTensor::scalar(4.0), 0.0, EllipticSource::Field(&g4), 80.0, &k());
    assert!((e4 - 2.0 * e1).abs() < 1e-10 * e4, "{e1} {e4}");
}

#[test]
fn time_indicator_vanishes_and_is_homogeneous() {
    let s = space(2, 1);
    let tensor = DiffusionTensor::identity();
    let bounds = CoefficientBounds::compute(&s, &tensor, 0.5);
    let u = DgVector::l2_project(&s, |x, _| x[0] * x[1], 0.0);
    let w = DgVector::l2_project(&s, |x, _| x[0] - x[1], 0.0);
    assert_eq!(time_indicator(&u, &u, &bounds, &tensor, 40.0, &k()).unwrap(), 0.0);
    let a = time_indicator(&u, &w, &bounds, &tensor, 40.0, &k()).unwrap();
    let b = time_indicator(&u.scaled(3.0), &w.scaled(3.0), &bounds, &tensor, 40.0, &k()).unwrap();
    assert!(a > 0.0 && (b - 3.0 * a).abs() < 1e-12 * b);
}

#[test]
fn data_indicator_closed_forms() {
    let s = space(3, 2);
    let tensor = DiffusionTensor::scalar(2.0);
    let interval = StepInterval::new(0.3, 0.35);
    assert_eq!(data_indicator(&s, |x, _| x[0] + 1.0, &interval, &tensor, &k()), 0.0);
    // f = t g with g = 1: ‖g‖ = 1, indicator = τ / (√3 √α♭).
    let got = data_indicator(&s, |_, t| t, &interval, &tensor, &k());
    let expected = 0.05 / (3f64.sqrt() * 2f64.sqrt());
    assert!((got - expected).abs() < 1e-12, "{got} {expected}");
    let half = data_indicator(&s, |x, t| (t * 3.0).sin() * x[0], &StepInterval::new(0.3, 0.325), &tensor, &k());
    let full = data_indicator(&s, |x, t| (t * 3.0).sin() * x[0], &interval, &tensor, &k());
    assert!((half / full - 0.5).abs() < 0.05);
}

#[test]
fn coarsening_vanishes_without_information_loss() {
    let coarse = space(2, 2);
    let u = DgVector::l2_project(&coarse, |x, _| (3.0 * x[0]).cos() * x[1], 0.0);
    let tensor = DiffusionTensor::identity();
    let interval = StepInterval::new(0.0, 0.1);
    assert_eq!(coarsening_indicator(&u, &u, &interval, &tensor, &k()).unwrap(), 0.0);
    let fine = DgSpace::new(Arc::new(coarse.mesh().refine_red(&[1, 4, 9])), 2).unwrap();
    let iu = transfer(&u, &fine).unwrap();
    assert!(coarsening_indicator(&u, &iu, &interval, &tensor, &k()).unwrap() < 1e-12);
}

/// Dense monomial L2 projection on each coarse element, integrated over its fine children.
fn projection_defect_oracle(fine_u: &DgVector, coarse: &Mesh) -> f64 {
    let fine = fine_u.space().mesh();
    let rule = triangle_rule(8).unwrap();
    let mono = |x: Point| [1.0, x[0], x[1]];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); coarse.num_triangles()];
    for t in 0..fine.num_triangles() {
        children[fine.ancestor_in(coarse, t).unwrap()].push(t);
    }
    let map = |t: usize, r: Point| {
        let [a, b, c] = fine.corners(t);
        [a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]), a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1])]
    };
    let mut total = 0.0;
    for kids in &children {
        let mut m = nalgebra::Matrix3::<f64>::zeros();
        let mut rhs = nalgebra::Vector3::<f64>::zeros();
        for &t in kids {
            let jac = 2.0 * fine.area(t);
            for (r, w) in rule.iter() {
                let x = map(t, r);
                let phi = mono(x);
                let u = fine_u.evaluate_on(t, x);
                for i in 0..3 {
                    rhs[i] += w * jac * u * phi[i];
                    for j in 0..3 {
                        m[(i, j)] += w * jac * phi[i] * phi[j];
                    }
                }
            }
        }
        let c = m.lu().solve(&rhs).unwrap();
        for &t in kids {
            let jac = 2.0 * fine.area(t);
            for (r, w) in rule.iter() {
                let x = map(t, r);
                let phi = mono(x);
                let pu = c[0] * phi[0] + c[1] * phi[1] + c[2] * phi[2];
                total += w * jac * (pu - fine_u.evaluate_on(t, x)).powi(2);
            }
        }
    }
    total.sqrt()
}

#[test]
fn coarsening_matches_dense_projection_oracle() {
    let coarse_mesh = mesh(2);
    let fine_mesh = Arc::new(coarse_mesh.refine_red(&[0, 3, 6, 10, 13]));
    let fine = DgSpace::new(fine_mesh, 1).unwrap();
    let coarse = DgSpace::new(coarse_mesh.clone(), 1).unwrap();
    let u_prev = DgVector::l2_project(&fine, |x, _| (7.0 * x[0]).sin() * (5.0 * x[1]).cos(), 0.0);
    let iu = transfer(&u_prev, &coarse).unwrap();
    let tau = 0.2;
    let got = coarsening_indicator(&u_prev, &iu, &StepInterval::new(0.0, tau), &DiffusionTensor::identity(), &k()).unwrap();
    let oracle = projection_defect_oracle(&u_prev, &coarse_mesh) / tau;
    assert!(oracle > 1e-3);
    assert!((got - oracle).abs() < 1e-10 * oracle, "{got} {oracle}");
}

#[test]
fn nonconforming_indicators_vanish_for_continuous_functions() {
    let s = space(2, 3);
    let u = DgVector::l2_project(&s, hat, 0.0);
    let w = DgVector::l2_project(&s, |x, t| 2.0 * hat(x, t), 0.0);
    let nc = nonconforming_indicators(&u, &w, &StepInterval::new(0.0, 0.1), &DiffusionTensor::identity(), 160.0, &k()).unwrap();
    assert!(nc.parabolic < 1e-12 && nc.elliptic < 1e-12 && nc.kappa < 1e-12, "{nc:?}");
}

#[test]
fn steady_solution_keeps_only_elliptic_nonconformity() {
    let s = space(2, 1);
    let u = DgVector::l2_project(&s, |x, _| (4.0 * x[0]).sin() + x[1], 0.0);
    let tensor = DiffusionTensor::identity();
    let nc = nonconforming_indicators(&u, &u, &StepInterval::new(0.0, 0.1), &tensor, 40.0, &k()).unwrap();
    assert_eq!(nc.parabolic, 0.0);
    assert_eq!(nc.kappa, 0.0);
    let bounds = CoefficientBounds::compute(&s, &tensor, 0.1);
    let faces = s.mesh().faces();
    let sigma_norm = jump_seminorm(&u, |f| 40.0 * bounds.face_sharp[f] / faces[f].h_face);
    assert!((nc.elliptic - 2f64.sqrt() * sigma_norm).abs() < 1e-12 * nc.elliptic);
}

#[test]
fn element_indicator_jump_matches_hand_integral() {
    let s = space(2, 1);
    let e = 5;
    let mut c = vec![0.0; s.total_dim()];
    // Constant basis function scaled to the unit indicator of element e.
    let one = DgVector::l2_project(&s, |_, _| 1.0, 0.0);
    c[s.element_dofs(e)].copy_from_slice(one.element_coefficients(e));
    let u = DgVector::from_coefficients(&s, c).unwrap();
    let zero = DgVector::zeros(&s);
    let tau = 0.1;
    let nc = nonconforming_indicators(&u, &zero, &StepInterval::new(0.0, tau), &DiffusionTensor::identity(), 40.0, &k()).unwrap();
    let faces = s.mesh().faces();
    let hand: f64 = s.mesh().element_faces(e).iter().map(|&f| faces[f].h_face * faces[f].length).sum();
    assert!((nc.kappa - hand.sqrt() / tau).abs() < 1e-12, "{} {}", nc.kappa, hand.sqrt() / tau);
    assert!((nc.parabolic - nc.kappa).abs() < 1e-12);
}

#[test]
fn tensor_variation_closed_form() {
    let s = space(1, 1);
    let tensor = DiffusionTensor::from_time_fn(|t| [[1.0 + t, 0.0], [0.0, 1.0 + t]]);
    let t_n = 0.5;
    for s_t in [0.4, 0.4436, 0.49] {
        let got = tensor_variation(&s, &tensor, s_t, t_n);
        let expected = (t_n - s_t).abs() / ((1.0 + s_t) * (1.0 + t_n)).sqrt();
        assert!((got - expected).abs() < 1e-14, "{got} {expected}");
    }
    assert_eq!(tensor_variation(&s, &DiffusionTensor::identity(), 0.1, 0.5), 0.0);
}

#[test]
fn operator_indicators_vanish_and_scale() {
    let s = space(2, 1);
    let a_u = DgVector::l2_project(&s, |x, _| x[0], 0.0);
    let a_p = DgVector::l2_project(&s, |x, _| x[1], 0.0);
    let interval = StepInterval::new(0.2, 0.3);
    let constant = operator_indicators(&s, &a_u, &a_p, None, &interval, &DiffusionTensor::identity(), &k()).unwrap();
    assert_eq!(constant.forward, 0.0);
    assert_eq!(constant.backward, 0.0);
    assert_eq!(constant.mesh, 0.0);
    let varying = DiffusionTensor::from_time_fn(|t| [[1.0 + t, 0.0], [0.0, 1.0 + t]]);
    let a = operator_indicators(&s, &a_u, &a_p, Some(&a_u), &interval, &varying, &k()).unwrap();
    let b = operator_indicators(&s, &a_u.scaled(2.0), &a_p.scaled(2.0), Some(&a_u.scaled(2.0)), &interval, &varying, &k()).unwrap();
    assert!(a.forward > 0.0 && a.backward > 0.0 && a.mesh > 0.0);
    for (x, y) in [(a.forward, b.forward), (a.backward, b.backward), (a.mesh, b.mesh)] {
        assert!((y - 2.0 * x).abs() < 1e-12 * y);
    }
}

#[test]
fn accumulation_formulas() {
    let zero = StepIndicators {
        n: 1,
        tau_n: 0.1,
        t_n: 0.1,
        ..Default::default()
    };
    assert_eq!(accumulate(&[zero], 0.7).unwrap().total, 0.7);
    let x = 0.3;
    let single = StepIndicators { theta: x, ..zero };
    let t = accumulate(&[single], 0.7).unwrap();
    assert!((t.parest - x * 0.1f64.sqrt()).abs() < 1e-15);
    assert!((t.total - (0.7 + 3.0 * x * 0.1f64.sqrt())).abs() < 1e-15);
    let gap = StepIndicators { n: 3, ..zero };
    assert!(matches!(accumulate(&[zero, gap], 0.0), Err(Error::IncompleteRecords { expected: 2, got: 3 })));
}

#[test]
fn kappa_enters_only_before_the_last_step() {
    let a = StepIndicators {
        n: 1,
        t_n: 0.1,
        tau_n: 0.1,
        kappa: 2.0,
        ..Default::default()
    };
    let b = StepIndicators { n: 2, t_n: 0.2, ..a };
    let one = accumulate(&[a], 0.0).unwrap();
    assert_eq!(one.total, 0.0);
    let two = accumulate(&[a, b], 0.0).unwrap();
    assert!((two.total - 1.5f64.sqrt() * 0.2).abs() < 1e-15);
    assert!(two.kappa_acc >= one.kappa_acc);
}
