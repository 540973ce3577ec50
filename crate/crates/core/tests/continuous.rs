use hoeg::continuous::{normalized_field, simulate, ContinuousConfig, DEFAULT_NORM_FLOOR, DEFAULT_RESOLVENT_TOL};
use hoeg::operator::{FnOperator, LinearOperator};
use hoeg::{builtin, Field, Operator};
use nalgebra::{DMatrix, DVector};

fn final_v(op: &dyn Operator, p: u32, t_end: f64, dt: f64, z0: Vec<f64>) -> DVector<f64> {
    let log = simulate(op, &ContinuousConfig::new(p, t_end, dt, z0)).unwrap();
    assert!(log.failure.is_none());
    DVector::from_vec(log.samples.last().unwrap().v.clone())
}

#[test]
fn identity_field_has_closed_form() {
    // p = 1, F(z) = z: the resolvent is v/2, so v(t) = v0·e^{−t/2}.
    let op = LinearOperator::new(DMatrix::identity(2, 2)).unwrap();
    let v = final_v(&op, 1, 2.0, 0.01, vec![1.0, -2.0]);
    let expect = DVector::from_row_slice(&[1.0, -2.0]) * (-1.0f64).exp();
    assert!((v - expect).norm() < 1e-9);
}

#[test]
fn step_halving_shows_fourth_order() {
    let problem = builtin("comonotone_toy").unwrap();
    let field = Field::standard(&problem);
    for p in [1, 2] {
        let v: Vec<_> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| final_v(&field, p, 1.0, dt, vec![1.0, 1.0]))
            .collect();
        let ratio = (&v[0] - &v[1]).norm() / (&v[1] - &v[2]).norm();
        assert!((12.0..=20.0).contains(&ratio), "p = {p}: ratio {ratio}");
    }
}

#[test]
fn monotone_problem_norm_never_increases() {
    let problem = builtin("quadratic_monotone").unwrap();
    let field = Field::standard(&problem);
    let log = simulate(&field, &ContinuousConfig::new(1, 10.0, 0.01, vec![1.0, 1.0])).unwrap();
    assert!(log.samples.windows(2).all(|w| w[1].op_norm <= w[0].op_norm + 1e-12));
}

#[test]
fn recorded_points_solve_the_resolvent() {
    let op = FnOperator::new(2, |z: &DVector<f64>| {
        DVector::from_row_slice(&[z[0] + z[1] + z[0].powi(3), z[1] - z[0]])
    });
    for p in [1, 2] {
        let log = simulate(&op, &ContinuousConfig::new(p, 3.0, 0.05, vec![1.5, -0.5])).unwrap();
        for s in &log.samples {
            let z = DVector::from_vec(s.z.clone());
            let v = DVector::from_vec(s.v.clone());
            let g = normalized_field(&op.eval(&z).unwrap(), p, DEFAULT_NORM_FLOOR);
            let residual = (&z + g - &v).norm();
            assert!(residual <= 10.0 * DEFAULT_RESOLVENT_TOL * v.norm().max(1.0), "t = {}: {residual}", s.t);
        }
    }
}
