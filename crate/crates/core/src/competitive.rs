//! The competitive field `F_α = M⁻¹ F` with
//! `M = [[I, α∇_{xy}f], [−α∇_{yx}f, I]]`.
//!
//! `M` is the identity plus a real skew-symmetric matrix, so its symmetric
//! part is `I`, every singular value is at least one, and `F_α` vanishes
//! exactly where `F` does.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{eval_operator, Point, ProblemSpec};

/// The block system `M u = g` at one point.
#[derive(Debug, Clone)]
pub struct CompetitiveSystem {
    pub alpha: f64,
    /// `∇_{xy} f(z)`, `d_x × d_y`.
    pub mixed: DMatrix<f64>,
    /// `g = (∇_x f, −∇_y f)`.
    pub g: DVector<f64>,
}

impl CompetitiveSystem {
    pub fn new(alpha: f64, mixed: DMatrix<f64>, g: DVector<f64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::argument(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if mixed.nrows() + mixed.ncols() != g.len() {
            return Err(Error::Dimension {
                expected: mixed.nrows() + mixed.ncols(),
                got: g.len(),
            });
        }
        Ok(Self { alpha, mixed, g })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        block_matrix(self.alpha, &self.mixed)
    }

    pub fn solve(&self) -> Result<DVector<f64>> {
        if self.alpha == 0.0 {
            return Ok(self.g.clone());
        }
        let u = self
            .matrix()
            .lu()
            .solve(&self.g)
            .ok_or_else(|| Error::Singular("competitive block matrix".into()))?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("competitive field is not finite"));
        }
        Ok(u)
    }
}

/// `[[I, αB], [−αBᵀ, I]]`.
pub fn block_matrix(alpha: f64, mixed: &DMatrix<f64>) -> DMatrix<f64> {
    let (dx, dy) = mixed.shape();
    let mut m = DMatrix::identity(dx + dy, dx + dy);
    m.view_mut((0, dx), (dx, dy)).copy_from(&(mixed * alpha));
    m.view_mut((dx, 0), (dy, dx)).copy_from(&(mixed.transpose() * -alpha));
    m
}

/// `F_α` on a raw coordinate vector.
pub fn f_alpha(problem: &ProblemSpec, z: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let mixed = problem.mixed_hessian(z)?;
    let g = problem.field(z)?;
    CompetitiveSystem::new(alpha, mixed, g)?.solve()
}

pub fn eval_f_alpha(problem: &ProblemSpec, z: &Point, alpha: f64) -> Result<DVector<f64>> {
    eval_operator(problem, z)?;
    f_alpha(problem, z.as_vector(), alpha)
}

/// Upper bound on the condition number of `M`: its singular values are
/// `sqrt(1 + α²σ_i(B)²)`, so `κ(M) = sqrt(1 + α²‖B‖²)`.
pub fn condition_bound(alpha: f64, mixed: &DMatrix<f64>) -> f64 {
    let sigma = mixed.singular_values().max();
    (1.0 + alpha * alpha * sigma * sigma).sqrt()
}

/// `(‖F(z)‖ ≤ tol) == (‖F_α(z)‖ ≤ tol·κ)`.
pub fn stationary_equivalence_check(
    problem: &ProblemSpec,
    z: &Point,
    alpha: f64,
    tol: f64,
) -> Result<bool> {
    let f = eval_operator(problem, z)?;
    let mixed = problem.mixed_hessian(z.as_vector())?;
    let kappa = condition_bound(alpha, &mixed);
    let fa = CompetitiveSystem::new(alpha, mixed, f.clone())?.solve()?;
    Ok((f.norm() <= tol) == (fa.norm() <= tol * kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(vec![x, y], 1).unwrap()
    }

    #[test]
    fn alpha_zero_is_plain_field() {
        let p = builtin("modified_forsaken").unwrap();
        let z = pt(0.3, -0.8);
        assert_eq!(eval_f_alpha(&p, &z, 0.0).unwrap(), eval_operator(&p, &z).unwrap());
    }

    #[test]
    fn bilinear_hand_inverse() {
        let p = builtin("bilinear").unwrap();
        let u = eval_f_alpha(&p, &pt(1.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(u[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(u[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn x2y_y_axis_stays_zero() {
        let p = builtin("x2y").unwrap();
        for alpha in [0.0, 1.0, 10.0, 100.0] {
            let u = eval_f_alpha(&p, &pt(0.0, 2.5), alpha).unwrap();
            assert_eq!(u.norm(), 0.0);
        }
    }

    #[test]
    fn missing_mixed_hessian_is_capability_error() {
        use std::sync::Arc;
        let p = ProblemSpec::new(
            "plain",
            1,
            1,
            Arc::new(|z| z[0] * z[1]),
            Arc::new(|z| DVector::from_element(1, z[1])),
            Arc::new(|z| DVector::from_element(1, z[0])),
        )
        .unwrap();
        assert!(matches!(eval_f_alpha(&p, &pt(1.0, 1.0), 1.0), Err(Error::Capability(_))));
    }

    #[test]
    fn stationary_equivalence_examples() {
        let fs = builtin("forsaken").unwrap();
        let zs = fs.z_star().unwrap().clone();
        assert!(stationary_equivalence_check(&fs, &zs, 10.0, 1e-6).unwrap());

        let x2y = builtin("x2y").unwrap();
        for alpha in [0.5, 2.0, 10.0] {
            assert!(stationary_equivalence_check(&x2y, &pt(0.0, 2.0), alpha, 1e-9).unwrap());
        }

        let bil = builtin("bilinear").unwrap();
        assert!(stationary_equivalence_check(&bil, &pt(1.0, 1.0), 1.0, 1e-6).unwrap());
    }

    #[test]
    fn small_alpha_approaches_plain_norm() {
        for name in crate::problem::BUILTIN_NAMES {
            let p = builtin(name).unwrap();
            for z in [pt(0.3, -0.4), pt(1.1, 0.9), pt(-0.7, 0.2)] {
                let n = eval_operator(&p, &z).unwrap().norm();
                let na = eval_f_alpha(&p, &z, 1e-8).unwrap().norm();
                assert!((n - na).abs() <= 1e-6, "{name}");
            }
        }
    }

    proptest! {
        #[test]
        fn block_matrix_singular_values_at_least_one(
            entries in proptest::collection::vec(-10.0f64..10.0, 4),
            alpha in 0.0f64..10.0,
        ) {
            let b = DMatrix::from_row_slice(2, 2, &entries);
            let m = block_matrix(alpha, &b);
            let smin = m.singular_values().min();
            prop_assert!(smin >= 1.0 - 1e-9);
        }

        #[test]
        fn zero_set_preserved(x in -1.5f64..1.5, y in -1.5f64..1.5, alpha in 0.0f64..20.0) {
            let p = builtin("forsaken").unwrap();
            let z = pt(x, y);
            let f = eval_operator(&p, &z).unwrap();
            let fa = eval_f_alpha(&p, &z, alpha).unwrap();
            prop_assert_eq!(f.norm() == 0.0, fa.norm() == 0.0);
            // σ_min(M) ≥ 1 gives ‖F_α‖ ≤ ‖F‖
            prop_assert!(fa.norm() <= f.norm() * (1.0 + 1e-12));
        }
    }
}
